"""Plain-text configuration files.

Format: one ``key = value`` pair per line; blank lines and ``#`` comments are
ignored (inline comments after the value are allowed).  Lists are
comma-separated.  Unknown or repeated keys are hard errors — a typo must
never silently fall back to a default.

Keys (defaults in parentheses):

    m, k, n                   antenna / user / RIS-element counts
    scheme (1)                pilot scheme 1 | 2 | 3
    trials                    Monte-Carlo trials per grid point
    master_seed               integer seed for the whole study
    d_ar, d_ur, d_au (20, 20, 30)       link distances in meters
    ple_ar, ple_ur, ple_au (2.1, 4.2, 2.2)   path-loss exponents
    kappa_ris (4)             RIS phase-noise concentration
    sigma2_ta, sigma2_tu, sigma2_ra (0.1)    distortion severities
    p_ref (1)                 reference-scheme pilot power; snr = p_ref / sigma2
    snr_db (-10..30 step 5)   SNR grid for snr sweeps
    sweep_snr_db (20)         fixed SNR for kappa / n sweeps
    kappa_grid (0,1,2,4,8,16) concentration grid for kappa sweeps
    n_grid (4,8,16)           RIS-size grid for n sweeps
    energy_reference_scheme (1)   scheme whose pilot energy others match
    t (scheme length)         optional training-length override; must equal
                              the scheme length and divide into n+1 blocks
    gamma_variant (exact)     receive-covariance variant: exact | symmetrized
    mse_variant (centered)    closed-form MSE variant: centered | moment
    ris_offsets (per_instant) phase-noise redraw cadence: per_instant | per_block
    oracle_draws (50000)      draws for the stats-oracle moment checks
    oracle_trials (2000)      trials for the stats-oracle estimator checks
"""

import hashlib

from .channels import Geometry
from .simulator import SimConfig

__all__ = ["ConfigError", "load_config", "parse_config", "canonical_echo", "config_hash"]


class ConfigError(ValueError):
    """Malformed configuration text."""


def _parse_int(s):
    return int(s, 0)


def _parse_float(s):
    return float(s)


def _parse_float_list(s):
    return tuple(float(x) for x in s.split(","))


def _parse_int_list(s):
    return tuple(int(x) for x in s.split(","))


def _parse_choice(*choices):
    def parse(s):
        if s not in choices:
            raise ValueError(f"expected one of {choices}")
        return s

    return parse


# key -> (parser, config field); order here defines the canonical echo order
_KEYS = {
    "m": (_parse_int, "m"),
    "k": (_parse_int, "k"),
    "n": (_parse_int, "n"),
    "scheme": (_parse_int, "scheme"),
    "trials": (_parse_int, "trials"),
    "master_seed": (_parse_int, "master_seed"),
    "d_ar": (_parse_float, None),
    "d_ur": (_parse_float, None),
    "d_au": (_parse_float, None),
    "ple_ar": (_parse_float, None),
    "ple_ur": (_parse_float, None),
    "ple_au": (_parse_float, None),
    "kappa_ris": (_parse_float, "kappa_ris"),
    "sigma2_ta": (_parse_float, "sigma2_ta"),
    "sigma2_tu": (_parse_float, "sigma2_tu"),
    "sigma2_ra": (_parse_float, "sigma2_ra"),
    "p_ref": (_parse_float, "p_ref"),
    "snr_db": (_parse_float_list, "snr_db"),
    "sweep_snr_db": (_parse_float, "sweep_snr_db"),
    "kappa_grid": (_parse_float_list, "kappa_grid"),
    "n_grid": (_parse_int_list, "n_grid"),
    "energy_reference_scheme": (_parse_int, "energy_reference_scheme"),
    "t": (_parse_int, "t_override"),
    "gamma_variant": (_parse_choice("exact", "symmetrized"), "gamma_variant"),
    "mse_variant": (_parse_choice("centered", "moment"), "mse_variant"),
    "ris_offsets": (_parse_choice("per_instant", "per_block"), "ris_offsets"),
    "oracle_draws": (_parse_int, "oracle_draws"),
    "oracle_trials": (_parse_int, "oracle_trials"),
}

_GEOMETRY_KEYS = ("d_ar", "d_ur", "d_au", "ple_ar", "ple_ur", "ple_au")


def parse_config(text, source="<config>"):
    """Parse config text into a SimConfig; raise ConfigError with line numbers."""
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: key {key!r} set twice")
        parser, _ = _KEYS[key]
        try:
            seen[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc

    geo_kwargs = {k: seen.pop(k) for k in list(seen) if k in _GEOMETRY_KEYS}
    fields = {}
    for key, value in seen.items():
        _, field_name = _KEYS[key]
        fields[field_name] = value
    if geo_kwargs:
        fields["geometry"] = Geometry(**geo_kwargs)
    try:
        return SimConfig(**fields)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def _fmt(value):
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def canonical_echo(cfg):
    """Canonical text form of a config: every key, fixed order, stable floats.

    Parsing the echo reproduces the config exactly; its hash identifies the
    study in manifests.
    """
    geo = cfg.geometry
    values = {
        "m": cfg.m,
        "k": cfg.k,
        "n": cfg.n,
        "scheme": cfg.scheme,
        "trials": cfg.trials,
        "master_seed": cfg.master_seed,
        "d_ar": geo.d_ar,
        "d_ur": geo.d_ur,
        "d_au": geo.d_au,
        "ple_ar": geo.ple_ar,
        "ple_ur": geo.ple_ur,
        "ple_au": geo.ple_au,
        "kappa_ris": cfg.kappa_ris,
        "sigma2_ta": cfg.sigma2_ta,
        "sigma2_tu": cfg.sigma2_tu,
        "sigma2_ra": cfg.sigma2_ra,
        "p_ref": cfg.p_ref,
        "snr_db": cfg.snr_db,
        "sweep_snr_db": cfg.sweep_snr_db,
        "kappa_grid": cfg.kappa_grid,
        "n_grid": cfg.n_grid,
        "energy_reference_scheme": cfg.energy_reference_scheme,
        "gamma_variant": cfg.gamma_variant,
        "mse_variant": cfg.mse_variant,
        "ris_offsets": cfg.ris_offsets,
        "oracle_draws": cfg.oracle_draws,
        "oracle_trials": cfg.oracle_trials,
    }
    if cfg.t_override is not None:
        values["t"] = cfg.t_override
    lines = [f"{key} = {_fmt(values[key])}" for key in _KEYS if key in values]
    return "\n".join(lines) + "\n"


def config_hash(cfg):
    return hashlib.sha256(canonical_echo(cfg).encode()).hexdigest()
