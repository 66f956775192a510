"""Discrepancies between observed and simulated behaviour summaries."""
from dataclasses import dataclass, asdict

MODES = ("aggregate", "split-conditions")


class MissingConditionError(KeyError):
    """A summary lacks the statistics for a requested condition."""


@dataclass(frozen=True)
class DiscrepancyConfig:
    """Weights of the squared mean term (``a``) and absolute std term (``b``)."""

    a: float = 1e-6
    b: float = 1e-6
    mode: str = "aggregate"

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("discrepancy weights must be non-negative")
        if self.mode not in MODES:
            raise ValueError(f"unknown discrepancy mode {self.mode!r}")

    def to_dict(self):
        return asdict(self)


def _condition(summary, condition, which):
    try:
        return summary[condition]
    except KeyError:
        raise MissingConditionError(
            f"{which} summary has no sessions for condition {condition!r}") from None


def tct_discrepancy(obs, sim, cfg=DiscrepancyConfig(), condition="all"):
    """``a * (mean_obs - mean_sim)**2 + b * |std_obs - std_sim|`` on TCT in ms."""
    o = _condition(obs, condition, "observed")
    s = _condition(sim, condition, "simulated")
    return (cfg.a * (o.tct_mean - s.tct_mean) ** 2
            + cfg.b * abs(o.tct_std - s.tct_std))


def split_condition_discrepancy(obs, sim, cfg=DiscrepancyConfig()):
    """Average of the target-present and target-absent TCT discrepancies."""
    d_pre = tct_discrepancy(obs, sim, cfg, "pre")
    d_abs = tct_discrepancy(obs, sim, cfg, "abs")
    return 0.5 * (d_pre + d_abs)


def discrepancy(obs, sim, cfg=DiscrepancyConfig()):
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == "aggregate":
        return tct_discrepancy(obs, sim, cfg, "all")
    return split_condition_discrepancy(obs, sim, cfg)
