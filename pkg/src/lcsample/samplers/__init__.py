"""LMC, ULMC, MALA, the proximal sampler, and their compositions."""

from lcsample.samplers.lmc import lmc_run, lmc_step
from lcsample.samplers.mala import MalaParams, mala_accept_logratio, mala_run, mala_step
from lcsample.samplers.pipelines import (
    FullConstants,
    WarmConstants,
    WeakConstants,
    pipeline_full,
    pipeline_weak,
    warm_start_ulmc,
)
from lcsample.samplers.prox import ProxParams, proximal_sampler_run, rgo_exact_quadratic
from lcsample.samplers.ulmc import (
    UlmcParams,
    lambda_min_bar_sigma,
    ulmc_bias_bound,
    ulmc_contraction_measured,
    ulmc_kernel_forms,
    ulmc_mix_iters,
    ulmc_step,
)
