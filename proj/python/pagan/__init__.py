"""Python bindings for the pagan C++ core."""

from ._pagan import (
    ConfigError,
    build_level_joints,
    checksum_label,
    config_text,
    frechet_distance,
    frechet_from_stats,
    generate_samples,
    generic_mixture_joints,
    gradient_diversity,
    js_divergence,
    kid_unbiased,
    lr_adapt_decision,
    minibatch_labels,
    mixture_marginal,
    mutual_information,
    optimal_discriminator,
    progression_decision,
    read_metrics,
    run_experiment,
    sample_bits,
    spectral_normalize,
    verify,
    verify_equality_chain,
    warmup_controller,
)

__all__ = [name for name in dir() if not name.startswith("_")]
