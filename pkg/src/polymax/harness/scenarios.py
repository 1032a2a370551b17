"""Scenario implementations: one seeded-replicate function plus a summarizer each.

Replicate r of every scenario draws from the counter-based stream keyed by
base_seed XOR r; scenario parameters all live in the config and are echoed
into the summary, so result files carry their own provenance.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .. import changepoint as cp
from .. import signals as sig
from ..moments import Distribution, analytic_cumulants, sample_cumulants
from ..pmm import (
    pmm2_estimate_location,
    pmm2_regression,
    pmm_dispatch,
    variance_reduction_g2,
)
from ..regression import (
    BUILTIN_RESPONSES,
    fit_least_squares,
    linear_response,
)
from ..sls import SlsProblem, sls_default_omega, sls_estimate
from ..volterra import VolterraKernels, mmse_adapt, volterra_predict
from .config import ExperimentConfig, ResultRecord


def _distribution(spec) -> Distribution:
    if isinstance(spec, Distribution):
        return spec
    return Distribution(spec["family"], tuple(spec["params"]))


def _centered_noise(dist: Distribution, sd: float, n: int, rng) -> np.ndarray:
    raw = sig.draw(dist, n, rng)
    c = analytic_cumulants(dist)
    scale = sd / np.sqrt(c.c2) if c.c2 > 0 else 1.0
    return (raw - dist.mean()) * scale


# ---------------------------------------------------------------------------
# g2-validation: location estimation, PMM2 against the sample mean
# ---------------------------------------------------------------------------

def _g2_defaults():
    return {"distribution": {"family": "chi_square", "params": [3]}, "theta": 0.0}


def g2_validation_replicate(config: ExperimentConfig, replicate: int, seed: int):
    p = {**_g2_defaults(), **config.params}
    dist = _distribution(p["distribution"])
    theta = float(p["theta"])
    rng = sig.rng_for(seed)
    rows = []
    for n in config.sample_sizes:
        x = theta + (sig.draw(dist, n, rng) - dist.mean())
        mean_hat = float(np.mean(x))
        rows.append(ResultRecord(config.scenario, replicate, seed, "mean", n,
                                 {"theta_hat": mean_hat,
                                  "sq_error": (mean_hat - theta) ** 2}))
        est = pmm2_estimate_location(x)
        th = float(est.theta_hat[0])
        rows.append(ResultRecord(config.scenario, replicate, seed, "pmm2", n,
                                 {"theta_hat": th, "sq_error": (th - theta) ** 2,
                                  "g_predicted": float(est.g_coefficient)}))
    return rows


def g2_validation_summary(config: ExperimentConfig, rows):
    p = {**_g2_defaults(), **config.params}
    c = analytic_cumulants(_distribution(p["distribution"]))
    out = {"g2_analytic": variance_reduction_g2(c.gamma3, c.gamma4), "by_n": {}}
    for n in config.sample_sizes:
        per = {}
        for est in ("mean", "pmm2"):
            th = [r.values["theta_hat"] for r in rows
                  if r.estimator == est and r.sample_size == n and not r.error]
            per[est] = {"variance": float(np.var(th, ddof=1)) if len(th) > 1 else 0.0,
                        "mse": float(np.mean([(t - p["theta"]) ** 2 for t in th]))}
        ratio = per["pmm2"]["variance"] / per["mean"]["variance"] \
            if per["mean"]["variance"] > 0 else float("nan")
        out["by_n"][str(n)] = {**per, "variance_ratio_pmm2_vs_mean": ratio}
    return out


# ---------------------------------------------------------------------------
# pmm-vs-sls and regression-gain: regression estimators on skewed errors
# ---------------------------------------------------------------------------

def _regression_defaults():
    return {
        "response": "exponential",
        "theta_true": [2.0, 0.5],
        "noise": {"family": "chi_square", "params": [3]},
        "noise_sd": 1.0,
        "x_range": [0.0, 1.0],
        # "optimal" = two-step efficient weighting; "scalar" = plain
        # functional with the weight picked by sls_default_omega
        "sls_weighting": "optimal",
    }


def _make_response(p, n):
    if p["response"] == "linear":
        z = np.linspace(p["x_range"][0], p["x_range"][1], n)
        x = np.column_stack([np.ones(n), z])
        return linear_response(len(p["theta_true"])), x
    resp = BUILTIN_RESPONSES[p["response"]]()
    x = np.linspace(p["x_range"][0], p["x_range"][1], n)
    return resp, x


def _sq_errors(theta_hat, theta_true):
    return {f"sq_error_{k + 1}": float((theta_hat[k] - theta_true[k]) ** 2)
            for k in range(len(theta_true))}


def pmm_vs_sls_replicate(config: ExperimentConfig, replicate: int, seed: int):
    p = {**_regression_defaults(), **config.params}
    dist = _distribution(p["noise"])
    theta_true = np.asarray(p["theta_true"], dtype=np.float64)
    rng = sig.rng_for(seed)
    rows = []
    for n in config.sample_sizes:
        response, x = _make_response(p, n)
        eps = _centered_noise(dist, float(p["noise_sd"]), n, rng)
        y = response.predict(theta_true, x) + eps

        ols = fit_least_squares(response, x, y)
        rows.append(ResultRecord(config.scenario, replicate, seed, "ols", n,
                                 {**{f"theta_{k+1}": float(v) for k, v in enumerate(ols.x)},
                                  **_sq_errors(ols.x, theta_true)}))

        est = pmm2_regression(x, y, response)
        rows.append(ResultRecord(config.scenario, replicate, seed, "pmm2", n,
                                 {**{f"theta_{k+1}": float(v) for k, v in enumerate(est.theta_hat)},
                                  **_sq_errors(est.theta_hat, theta_true),
                                  "g_predicted": float(est.g_coefficient)}))

        if p["sls_weighting"] == "optimal":
            fit = sls_estimate(SlsProblem(response=response, x=x, y=y, omega=0.0,
                                          weighting="optimal"), ols.x)
            omega = 0.0
        else:
            resid = y - response.predict(ols.x, x)
            cum = sample_cumulants(resid, 4)
            probe = SlsProblem(response=response, x=x, y=y, omega=0.0)
            omega = sls_default_omega(cum, problem=probe, theta=ols.x)
            fit = sls_estimate(SlsProblem(response=response, x=x, y=y, omega=omega), ols.x)
        rows.append(ResultRecord(config.scenario, replicate, seed, "sls", n,
                                 {**{f"theta_{k+1}": float(v) for k, v in enumerate(fit.theta_hat)},
                                  **_sq_errors(fit.theta_hat, theta_true),
                                  "omega": float(omega)}))
    return rows


def _mse_table(config, rows, estimators):
    p = {**_regression_defaults(), **config.params}
    kdim = len(p["theta_true"])
    out = {}
    for n in config.sample_sizes:
        per = {}
        for est in estimators:
            sub = [r for r in rows if r.estimator == est and r.sample_size == n and not r.error]
            per[est] = {f"mse_{k+1}": float(np.mean([r.values[f"sq_error_{k+1}"] for r in sub]))
                        for k in range(kdim)}
        out[str(n)] = per
    return out, kdim


def pmm_vs_sls_summary(config: ExperimentConfig, rows):
    table, kdim = _mse_table(config, rows, ("ols", "pmm2", "sls"))
    for n, per in table.items():
        ratios = {}
        for k in range(kdim):
            key = f"mse_{k+1}"
            ratios[f"pmm2_over_sls_{k+1}"] = per["pmm2"][key] / per["sls"][key]
            ratios[f"pmm2_over_ols_{k+1}"] = per["pmm2"][key] / per["ols"][key]
            ratios[f"sls_over_ols_{k+1}"] = per["sls"][key] / per["ols"][key]
        per["ratios"] = ratios
    return {"by_n": table}


def regression_gain_replicate(config: ExperimentConfig, replicate: int, seed: int):
    p = {**_regression_defaults(), "response": "linear",
         "theta_true": [1.0, 2.0], **config.params}
    dist = _distribution(p["noise"])
    theta_true = np.asarray(p["theta_true"], dtype=np.float64)
    rng = sig.rng_for(seed)
    rows = []
    for n in config.sample_sizes:
        response, x = _make_response(p, n)
        eps = _centered_noise(dist, float(p["noise_sd"]), n, rng)
        y = response.predict(theta_true, x) + eps
        ols = fit_least_squares(response, x, y)
        rows.append(ResultRecord(config.scenario, replicate, seed, "ols", n,
                                 _sq_errors(ols.x, theta_true)))
        est = pmm2_regression(x, y, response)
        rows.append(ResultRecord(config.scenario, replicate, seed, "pmm2", n,
                                 {**_sq_errors(est.theta_hat, theta_true),
                                  "g_predicted": float(est.g_coefficient)}))
    return rows


def regression_gain_summary(config: ExperimentConfig, rows):
    cfg = ExperimentConfig(scenario=config.scenario, replicates=config.replicates,
                           base_seed=config.base_seed, sample_sizes=config.sample_sizes,
                           params={**{"response": "linear", "theta_true": [1.0, 2.0]},
                                   **config.params})
    table, kdim = _mse_table(cfg, rows, ("ols", "pmm2"))
    for n, per in table.items():
        per["ratios"] = {f"pmm2_over_ols_{k+1}": per["pmm2"][f"mse_{k+1}"] / per["ols"][f"mse_{k+1}"]
                         for k in range(kdim)}
    return {"by_n": table}


# ---------------------------------------------------------------------------
# volterra-spectral: effective-width direction check under a quadratic channel
# ---------------------------------------------------------------------------

def _volterra_defaults():
    # ofdm nfft=132 puts 64 subcarriers at ~97% band occupancy, the regime
    # where second-order processing trims band edges; the 0.4-cutoff noise
    # leaves headroom that quadratic intermodulation products expand into
    return {
        "signals": ["ofdm", "filtered-noise"],
        "sample_rate": 960000.0,
        "m1": 3,
        "m2": 3,
        "ridge": 1e-8,
        "channel_h1": [1.0, 0.3, -0.15],
        "channel_h2": [[0.25, 0.1, 0.0], [0.1, 0.0, 0.0], [0.0, 0.0, 0.0]],
        "channel_noise_sd": 0.05,
        "ofdm": {"subcarriers": 64, "nfft": 132, "cyclic_prefix": 12},
        "noise_cutoff": 0.4,
    }


def volterra_spectral_replicate(config: ExperimentConfig, replicate: int, seed: int):
    p = {**_volterra_defaults(), **config.params}
    fs = float(p["sample_rate"])
    channel = VolterraKernels(h0=0.0, h1=np.asarray(p["channel_h1"]),
                              h2=np.asarray(p["channel_h2"]))
    rng = sig.rng_for(seed ^ 0x5EED)
    rows = []
    length = config.sample_sizes[0]
    for k, kind in enumerate(p["signals"]):
        if kind == "ofdm":
            spec = sig.SignalSpec("ofdm", length, fs, seed + 7 * k, dict(p["ofdm"]))
        elif kind == "filtered-noise":
            spec = sig.SignalSpec("filtered-noise", length, fs, seed + 7 * k,
                                  {"cutoff": p["noise_cutoff"]})
        else:
            spec = sig.SignalSpec(kind, length, fs, seed + 7 * k, {})
        source = sig.generate(spec)
        distorted = volterra_predict(channel, source)
        distorted = distorted + float(p["channel_noise_sd"]) * rng.normal(size=distorted.size)

        # processing = one-step self-prediction of the distorted signal: the
        # adapted model's output is the "Volterra-processed" signal, whose
        # width is compared against the unprocessed (distorted) input
        report = mmse_adapt(distorted[:-1], distorted[1:], int(p["m1"]), int(p["m2"]),
                            ridge=float(p["ridge"]))
        processed = volterra_predict(report.kernels, distorted[:-1])

        w_source = sig.spectral_metrics(source, fs).effective_width
        w_distorted = sig.spectral_metrics(distorted, fs).effective_width
        w_processed = sig.spectral_metrics(processed, fs).effective_width
        rows.append(ResultRecord(config.scenario, replicate, seed, kind, length,
                                 {"width_source": w_source,
                                  "width_distorted": w_distorted,
                                  "width_processed": w_processed,
                                  "width_ratio": w_processed / w_distorted,
                                  "residual_mse": report.residual_mse}))
    return rows


def volterra_spectral_summary(config: ExperimentConfig, rows):
    p = {**_volterra_defaults(), **config.params}
    out = {"width_definition": "occupied-99pct", "ratio": {}, "direction": {}}
    for kind in p["signals"]:
        ratios = [r.values["width_ratio"] for r in rows if r.estimator == kind and not r.error]
        mean_ratio = float(np.mean(ratios)) if ratios else float("nan")
        out["ratio"][kind] = mean_ratio
        out["direction"][kind] = "narrower" if mean_ratio < 1.0 else "wider"
    return out


# ---------------------------------------------------------------------------
# cusum-far: false-alarm control of the polynomial CUSUM detector
# ---------------------------------------------------------------------------

def _cusum_defaults():
    return {
        "epsilons": [0.2, 0.05, 0.01],
        "shift_sigmas": 3.0,
        "degree": 1,
        "unimodal": False,
        "measure_delay": False,
        "delay_epsilon": 0.05,
        "change_at": 500,
        "post_change_samples": 4000,
    }


@lru_cache(maxsize=32)
def _cached_detectors(shift: float, degree: int, unimodal: bool, epsilons: tuple,
                      horizon: int):
    pre = analytic_cumulants(Distribution.normal(0.0, 1.0))
    post = analytic_cumulants(Distribution.normal(0.0, 1.0))
    score = cp.build_polynomial_score(pre, 0.0, post, shift, degree=degree)
    detectors = {}
    for eps in epsilons:
        h = cp.calibrate_threshold(score.mean_pre, score.var_pre, eps,
                                   horizon, unimodal=unimodal)
        detectors[eps] = cp.CusumDetector(score=score, threshold=h, epsilon=eps)
    return detectors


def _cusum_detectors(config: ExperimentConfig):
    p = {**_cusum_defaults(), **config.params}
    horizon = config.sample_sizes[0]
    detectors = _cached_detectors(float(p["shift_sigmas"]), int(p["degree"]),
                                  bool(p["unimodal"]),
                                  tuple(float(e) for e in p["epsilons"]), horizon)
    return p, detectors, horizon


def cusum_far_replicate(config: ExperimentConfig, replicate: int, seed: int):
    p, detectors, horizon = _cusum_detectors(config)
    rng = sig.rng_for(seed)
    stream = rng.normal(0.0, 1.0, horizon)
    rows = []
    for eps, det in detectors.items():
        rec = cp.run_detector(det, stream)
        rows.append(ResultRecord(config.scenario, replicate, seed, f"eps={eps:g}",
                                 horizon, {"fired": float(rec.fired),
                                           "threshold": det.threshold}))
    if p["measure_delay"]:
        det = detectors[float(p["delay_epsilon"])]
        n0 = int(p["change_at"])
        n1 = int(p["post_change_samples"])
        h1 = rng.normal(0.0, 1.0, n0 + n1)
        h1[n0:] += float(p["shift_sigmas"])
        rec = cp.run_detector(det, h1)
        delay = float(rec.tau - n0) if rec.fired and rec.tau > n0 else float("nan")
        rows.append(ResultRecord(config.scenario, replicate, seed, "delay",
                                 n0 + n1, {"tau": float(rec.tau or -1), "delay": delay}))
    return rows


def cusum_far_summary(config: ExperimentConfig, rows):
    p = {**_cusum_defaults(), **config.params}
    far = {}
    for eps in p["epsilons"]:
        fired = [r.values["fired"] for r in rows
                 if r.estimator == f"eps={float(eps):g}" and not r.error]
        far[f"{float(eps):g}"] = float(np.mean(fired)) if fired else float("nan")
    ordered = sorted((float(e) for e in p["epsilons"]), reverse=True)
    rates = [far[f"{e:g}"] for e in ordered]
    out = {"far": far, "monotone_in_epsilon": bool(all(rates[i] >= rates[i + 1]
                                                       for i in range(len(rates) - 1)))}
    delays = [r.values["delay"] for r in rows if r.estimator == "delay"
              and not r.error and np.isfinite(r.values["delay"])]
    if delays:
        out["median_delay"] = float(np.median(delays))
        out["detected_fraction"] = float(len(delays)) / max(
            1, sum(1 for r in rows if r.estimator == "delay"))
    return out


# ---------------------------------------------------------------------------
# dispatch-accuracy: method selection on known families
# ---------------------------------------------------------------------------

_DISPATCH_CODE = {"OLS": 0.0, "PMM2": 1.0, "PMM3": 2.0}


def _dispatch_defaults():
    return {
        "families": {
            "normal": {"family": "normal", "params": [0.0, 1.0]},
            "chi_square": {"family": "chi_square", "params": [3]},
            "uniform": {"family": "uniform", "params": [0.0, 1.0]},
        },
        "expected": {"normal": "OLS", "chi_square": "PMM2", "uniform": "PMM3"},
    }


def dispatch_accuracy_replicate(config: ExperimentConfig, replicate: int, seed: int):
    p = {**_dispatch_defaults(), **config.params}
    rng = sig.rng_for(seed)
    n = config.sample_sizes[0]
    rows = []
    for name, dspec in p["families"].items():
        x = sig.draw(_distribution(dspec), n, rng)
        choice = pmm_dispatch(x)
        rows.append(ResultRecord(config.scenario, replicate, seed, name, n,
                                 {"choice_code": _DISPATCH_CODE[choice],
                                  "correct": float(choice == p["expected"][name])}))
    return rows


def dispatch_accuracy_summary(config: ExperimentConfig, rows):
    p = {**_dispatch_defaults(), **config.params}
    acc = {}
    for name in p["families"]:
        sub = [r.values["correct"] for r in rows if r.estimator == name and not r.error]
        acc[name] = float(np.mean(sub)) if sub else float("nan")
    return {"accuracy": acc}


SCENARIO_FUNCTIONS = {
    "g2-validation": (g2_validation_replicate, g2_validation_summary),
    "pmm-vs-sls": (pmm_vs_sls_replicate, pmm_vs_sls_summary),
    "regression-gain": (regression_gain_replicate, regression_gain_summary),
    "volterra-spectral": (volterra_spectral_replicate, volterra_spectral_summary),
    "cusum-far": (cusum_far_replicate, cusum_far_summary),
    "dispatch-accuracy": (dispatch_accuracy_replicate, dispatch_accuracy_summary),
}
