#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pagan/bitaug.hpp"
#include "pagan/harness/config.hpp"
#include "pagan/harness/metrics_io.hpp"
#include "pagan/harness/trainer.hpp"
#include "pagan/harness/verify.hpp"
#include "pagan/losses.hpp"
#include "pagan/metrics.hpp"
#include "pagan/nn/spectral_norm.hpp"
#include "pagan/prob_oracle.hpp"
#include "pagan/scheduler.hpp"

namespace py = pybind11;
using namespace pagan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

prob::DiscreteDistribution dist(const std::vector<double>& m) { return prob::DiscreteDistribution(m); }

Array table_array(const prob::JointTable& t) {
  Array out({t.space_size, t.sequences});
  std::copy(t.masses.begin(), t.masses.end(), out.mutable_data());
  return out;
}

prob::JointTable table_from(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("joint table must be 2-D [space, sequences]");
  prob::JointTable t;
  t.space_size = static_cast<std::size_t>(a.shape(0));
  t.sequences = static_cast<std::size_t>(a.shape(1));
  t.level = 0;
  for (std::size_t s = t.sequences; s > 1; s >>= 1) ++t.level;
  t.masses.assign(a.data(), a.data() + a.size());
  return t;
}

nn::Tensor tensor_from(const Array& a) {
  nn::Shape shape(a.shape(), a.shape() + a.ndim());
  return nn::Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array array_from(const nn::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

bitaug::BitSequence bits_from(const std::vector<int>& v) {
  bitaug::BitSequence s;
  for (int b : v) {
    if (b != 0 && b != 1) throw std::invalid_argument("bits must be 0 or 1");
    s.bits.push_back(static_cast<std::uint8_t>(b));
  }
  return s;
}

std::string label_name(bitaug::ClassLabel l) { return l == bitaug::ClassLabel::True ? "TRUE" : "FAKE"; }

const char* decision_name(sched::Decision d) {
  switch (d) {
    case sched::Decision::LevelUp: return "level_up";
    case sched::Decision::DecayLr: return "decay_lr";
    default: return "hold";
  }
}

sched::SchedulerState scheduler_state(const std::vector<double>& history, std::size_t level, std::size_t max_level,
                                      double threshold, double lr_d, double lr_decay, double lr_floor) {
  sched::SchedulerState s;
  s.level = level;
  s.max_level = max_level;
  s.kid_history = history;
  s.threshold = threshold;
  s.lr_d = lr_d;
  s.lr_decay = lr_decay;
  s.lr_floor = lr_floor;
  s.validate();
  return s;
}

py::dict summary_dict(const harness::RunSummary& s) {
  auto point = [](const harness::EvalPoint& p) {
    py::dict d;
    d["kid"] = p.kid;
    d["frechet"] = p.frechet;
    d["test_kid"] = p.test_kid;
    return d;
  };
  py::dict d;
  d["name"] = s.name;
  d["seed"] = s.seed;
  d["status"] = s.status;
  d["error"] = s.error;
  d["iterations_completed"] = s.iterations_completed;
  d["final_level"] = s.final_level;
  d["progressions"] = s.progressions;
  d["initial"] = point(s.initial);
  d["final"] = point(s.final);
  d["final_lr_d"] = s.final_lr_d;
  return d;
}

py::list records_list(const std::vector<harness::MetricsRecord>& records) {
  py::list out;
  for (const auto& r : records) {
    py::dict d;
    d["iteration"] = r.iteration;
    d["level"] = r.level;
    d["d_loss"] = r.d_loss;
    d["g_loss"] = r.g_loss;
    d["kid"] = r.kid;
    d["frechet"] = r.frechet;
    d["lr_d"] = r.lr_d;
    d["event"] = harness::event_name(r.event);
    out.append(d);
  }
  return out;
}

harness::ExperimentConfig config_from(const std::string& text, const py::dict& overrides) {
  auto cfg = harness::parse_config(text);
  for (const auto& [k, v] : overrides) harness::apply_setting(cfg, py::str(k), py::str(v));
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_pagan, m) {
  m.doc() = "Progressive augmentation laboratory: exact oracles, checksum batches, metrics and the trainer";

  py::register_exception<harness::ConfigError>(m, "ConfigError", PyExc_ValueError);

  // exact distributions
  m.def("mixture_marginal", [](const std::vector<double>& pd, const std::vector<double>& pg) {
    return prob::mixture_marginal(dist(pd), dist(pg)).masses();
  });
  m.def(
      "build_level_joints",
      [](const std::vector<double>& pd, const std::vector<double>& pg, int level) {
        auto [p, q] = prob::build_level_joints(dist(pd), dist(pg), level);
        return py::make_tuple(table_array(p), table_array(q));
      },
      py::arg("p_d"), py::arg("p_g"), py::arg("level"));
  m.def("js_divergence", [](const Array& p, const Array& q) {
    if (p.ndim() == 1) {
      return prob::js_divergence(std::vector<double>(p.data(), p.data() + p.size()),
                                 std::vector<double>(q.data(), q.data() + q.size()));
    }
    return prob::js_divergence(table_from(p), table_from(q));
  });
  m.def("mutual_information", [](const Array& joint) { return prob::mutual_information(table_from(joint)); });
  m.def("optimal_discriminator", [](const Array& p, const Array& q) {
    const auto d = prob::optimal_discriminator(table_from(p), table_from(q));
    Array out({d.space_size, d.sequences});
    double* o = out.mutable_data();
    for (std::size_t i = 0; i < d.values.size(); ++i) o[i] = d.masked[i] ? std::nan("") : d.values[i];
    return out;
  });
  m.def("generic_mixture_joints", [](const std::vector<double>& pd, const std::vector<double>& pg,
                                     const std::vector<double>& psa, const std::vector<double>& psb) {
    auto [p, q] = prob::generic_mixture_joints(dist(pd), dist(pg), dist(psa), dist(psb));
    return py::make_tuple(table_array(p), table_array(q));
  });
  m.def(
      "verify_equality_chain",
      [](const std::vector<double>& pd, const std::vector<double>& pg, int max_level, double tol) {
        const auto r = prob::verify_equality_chain(dist(pd), dist(pg), max_level, tol);
        py::dict d;
        d["base_js"] = r.base_js;
        d["level_js"] = r.level_js;
        d["deviations"] = r.deviations;
        d["max_deviation"] = r.max_deviation;
        d["passed"] = r.passed;
        return d;
      },
      py::arg("p_d"), py::arg("p_g"), py::arg("max_level"), py::arg("tol") = 1e-12);

  // checksum batches
  m.def(
      "checksum_label", [](int origin, const std::vector<int>& bits) { return label_name(bitaug::checksum_label(origin, bits_from(bits))); },
      py::arg("origin_bit"), py::arg("bits"));
  m.def(
      "sample_bits",
      [](std::size_t level, double p_one, std::size_t count, std::uint64_t seed) {
        Rng rng(seed);
        return array_from(bitaug::bits_matrix(bitaug::sample_bits(level, p_one, count, rng), level));
      },
      py::arg("level"), py::arg("p_one"), py::arg("count"), py::arg("seed") = 0);
  m.def("minibatch_labels", [](const Array& real, const Array& fake, const std::vector<std::vector<int>>& bits) {
    std::vector<bitaug::BitSequence> seqs;
    for (const auto& b : bits) seqs.push_back(bits_from(b));
    const auto batch = bitaug::build_minibatch(tensor_from(real), tensor_from(fake), seqs);
    std::vector<std::string> labels;
    for (auto l : batch.labels) labels.push_back(label_name(l));
    return py::make_tuple(array_from(batch.samples), labels);
  });

  // estimators
  m.def("kid_unbiased", &metrics::kid_unbiased, py::arg("x"), py::arg("y"), py::arg("degree") = 3);
  m.def("frechet_distance", [](const metrics::Matrix& a, const metrics::Matrix& b) {
    return metrics::frechet_distance(metrics::sample_stats(a), metrics::sample_stats(b));
  });
  m.def("frechet_from_stats", [](const metrics::Vector& mu_a, const metrics::Matrix& cov_a, const metrics::Vector& mu_b,
                                 const metrics::Matrix& cov_b) {
    metrics::SampleStats a{mu_a, cov_a, 2}, b{mu_b, cov_b, 2};
    return metrics::frechet_distance(a, b);
  });
  m.def("gradient_diversity", [](const metrics::Matrix& g) {
    const auto r = metrics::gradient_diversity(g);
    py::dict d;
    d["gamma_bar"] = r.gamma_bar;
    d["degenerate"] = r.degenerate;
    d["nonzero_eigenvalues"] = r.nonzero_eigenvalues;
    d["top_eigenvalues"] = r.top_eigenvalues;
    return d;
  });
  m.def(
      "spectral_normalize",
      [](const Array& w, int iters, std::uint64_t seed) {
        const auto t = tensor_from(w);
        Rng rng(seed);
        auto u = nn::init_power_vector(t.dim(0), rng);
        const auto r = nn::spectral_normalize(t, iters, u);
        return py::make_tuple(array_from(r.normalized), r.sigma, r.degenerate);
      },
      py::arg("weight"), py::arg("iters") = 50, py::arg("seed") = 0);

  // scheduling
  m.def(
      "progression_decision",
      [](const std::vector<double>& history, double kid, std::size_t level, std::size_t max_level, double threshold) {
        auto s = scheduler_state(history, level, max_level, threshold, 4e-4, 0.8, 1e-4);
        const auto d = sched::progression_decision(s, kid);
        return py::make_tuple(decision_name(d), s.level, s.kid_history);
      },
      py::arg("history"), py::arg("kid"), py::arg("level") = 0, py::arg("max_level") = 20, py::arg("threshold") = 0.05);
  m.def(
      "lr_adapt_decision",
      [](const std::vector<double>& history, double kid, double lr_d, double lr_decay, double lr_floor) {
        auto s = scheduler_state(history, 0, 0, 0.05, lr_d, lr_decay, lr_floor);
        const auto d = sched::lr_adapt_decision(s, kid);
        return py::make_tuple(decision_name(d), s.lr_d);
      },
      py::arg("history"), py::arg("kid"), py::arg("lr_d") = 4e-4, py::arg("lr_decay") = 0.8, py::arg("lr_floor") = 1e-4);
  m.def(
      "warmup_controller",
      [](const std::string& kind, long window, std::optional<long> since) {
        sched::SchedulerState s;
        s.warmup.kind = sched::parse_warmup(kind);
        s.warmup.window = window;
        const auto d = sched::warmup_controller(s, since);
        return py::make_tuple(d.route_new_weights_to_aux_optimizer, d.p_one);
      },
      py::arg("kind"), py::arg("window") = 0, py::arg("iterations_since_level_up") = py::none());

  // harness
  m.def(
      "run_experiment",
      [](const std::string& config_text, std::optional<std::filesystem::path> out_dir, const py::dict& overrides) {
        const auto cfg = config_from(config_text, overrides);
        harness::RunResult r;
        {
          py::gil_scoped_release release;
          r = harness::run_experiment(cfg, out_dir);
        }
        py::dict d;
        d["summary"] = summary_dict(r.summary);
        d["records"] = records_list(r.records);
        d["exit_code"] = r.exit_code;
        return d;
      },
      py::arg("config_text"), py::arg("out_dir") = py::none(), py::arg("overrides") = py::dict());
  m.def("generate_samples", [](const std::filesystem::path& run_dir, std::size_t n, std::uint64_t seed) {
    return array_from(harness::generate_samples(run_dir, n, seed));
  }, py::arg("run_dir"), py::arg("n"), py::arg("seed") = 0);
  m.def("config_text", [](const std::string& text, const py::dict& overrides) {
    return harness::to_text(config_from(text, overrides));
  }, py::arg("config_text") = "", py::arg("overrides") = py::dict());
  m.def("verify", [](const std::string& selector) {
    py::list out;
    for (const auto& r : harness::run_verify(selector)) {
      py::dict d;
      d["name"] = r.name;
      d["passed"] = r.passed;
      d["max_deviation"] = r.max_deviation;
      d["tolerance"] = r.tolerance;
      d["detail"] = r.detail;
      out.append(d);
    }
    return out;
  }, py::arg("selector") = "all");
  m.def("read_metrics", [](const std::filesystem::path& run_dir) {
    return records_list(harness::read_metrics_csv(run_dir / harness::kMetricsFile));
  });
}
