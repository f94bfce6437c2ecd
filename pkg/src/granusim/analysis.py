"""Statistical models fitted to an experiment results table.

Three artifacts: a variance-share decomposition of each response over
the experimental factors (sequential type-I sums of squares, covariate
treatment, two-way interactions), a logistic model of disruption
visibility against the recovery-time-to-granularity ratio, and a linear
model relating the propagated and actual recovery-time ratios.
"""

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CollinearError, DegenerateModel

#: Fixed term order for sequential sums of squares.
TERM_ORDER = ("tg", "rt", "ds", "tg:rt", "tg:ds", "rt:ds")

#: Ridge penalty keeping the logistic MLE finite under perfect separation.
LOGISTIC_RIDGE = 1e-6


def load_results(path) -> dict[str, np.ndarray]:
    """Read a results CSV into numeric columns, keeping only ok rows.

    Censored runs get sprt = NaN; callers drop them for recovery-time
    models but keep them for visibility models.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["status"] == "ok"]
    if not rows:
        raise ValueError(f"no usable rows in {path}")
    table = {
        "tg": np.array([float(r["tg"]) for r in rows]),
        "rt": np.array([float(r["rt"]) for r in rows]),
        "ds": np.array([float(r["ds"]) for r in rows]),
        "spds": np.array([float(r["spds_pct"]) for r in rows]),
        "sprt": np.array([float(r["sprt_steps"]) if r["sprt_steps"] != "" else math.nan
                          for r in rows]),
        "visible": np.array([r["visible"] == "true" for r in rows]),
    }
    return table


@dataclass(frozen=True)
class VarianceShareReport:
    response: str
    shares: dict[str, float]  # per term, in TERM_ORDER
    residual_share: float

    def total(self) -> float:
        return sum(self.shares.values()) + self.residual_share


def _term_column(table: dict[str, np.ndarray], term: str) -> np.ndarray:
    col = np.ones_like(next(iter(table.values())))
    for factor in term.split(":"):
        col = col * table[factor]
    return col


def variance_shares(table: dict[str, np.ndarray], response: str,
                    terms: tuple[str, ...] = TERM_ORDER) -> VarianceShareReport:
    """Sequential (type I) share of total sum of squares per model term.

    Covariates enter a least-squares linear model in the fixed order
    given; each term's share is the drop in residual sum of squares
    when the term is added, over the total sum of squares.
    """
    y = np.asarray(table[response], dtype=float)
    if np.isnan(y).any():
        raise ValueError(f"response {response} contains missing values; drop them first")
    for name in ("tg", "rt", "ds"):
        if len(np.unique(table[name])) < 2:
            raise ValueError(f"covariate {name} needs at least 2 distinct values")
    n = len(y)
    ss_total = float(((y - y.mean()) ** 2).sum())
    if ss_total == 0:
        raise ValueError("response has zero variance")

    X = np.ones((n, 1))
    prev_rss = ss_total
    shares: dict[str, float] = {}
    for term in terms:
        X = np.column_stack([X, _term_column(table, term)])
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise CollinearError(f"design matrix rank-deficient after adding {term}")
        coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
        rss = float(((y - X @ coef) ** 2).sum())
        shares[term] = (prev_rss - rss) / ss_total
        prev_rss = rss
    return VarianceShareReport(response=response, shares=shares,
                               residual_share=prev_rss / ss_total)


@dataclass(frozen=True)
class LogisticVisibilityModel:
    intercept: float
    slope: float
    gradient_norm: float

    def probability(self, ratio) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-(self.intercept + self.slope * np.asarray(ratio))))

    def ratio_at(self, p: float) -> float:
        """Ratio at which predicted visibility probability equals p."""
        if not 0.0 < p < 1.0:
            raise ValueError(f"probability must be in (0, 1), got {p}")
        if self.slope == 0:
            raise DegenerateModel("zero slope; ratio is uninformative")
        return (math.log(p / (1.0 - p)) - self.intercept) / self.slope

    @property
    def threshold(self) -> float:
        return self.ratio_at(0.5)


def fit_visibility_logistic(table: dict[str, np.ndarray],
                            ridge: float = LOGISTIC_RIDGE,
                            max_iter: int = 200) -> LogisticVisibilityModel:
    """Penalized-likelihood logistic fit of visible ~ rt/tg via Newton/IRLS."""
    x = table["rt"] / table["tg"]
    y = np.asarray(table["visible"], dtype=float)
    if y.min() == y.max():
        raise DegenerateModel("all rows share one visibility label")
    X = np.column_stack([np.ones_like(x), x])
    beta = np.zeros(2)
    grad_norm = math.inf
    # Only the slope is penalized; a penalty on the intercept would
    # bias the midpoint of otherwise symmetric data away from center.
    penalty = np.array([0.0, ridge])
    for _ in range(max_iter):
        mu = 1.0 / (1.0 + np.exp(-(X @ beta)))
        grad = X.T @ (y - mu) - penalty * beta
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < 1e-10:
            break
        w = np.clip(mu * (1.0 - mu), 1e-12, None)
        hess = (X * w[:, None]).T @ X + np.diag(penalty)
        beta = beta + np.linalg.solve(hess, grad)
    return LogisticVisibilityModel(intercept=float(beta[0]), slope=float(beta[1]),
                                   gradient_norm=grad_norm)


@dataclass(frozen=True)
class RatioLinearModel:
    intercept: float
    slope: float
    r_squared: float

    def predict_sprt(self, rt, tg):
        return (self.intercept + self.slope * (np.asarray(rt) / tg)) * tg

    def estimate_rt(self, sprt: float, tg: float) -> float:
        """Inverse prediction: actual recovery time from observed one."""
        if self.slope == 0:
            raise DegenerateModel("zero slope; model not invertible")
        return (sprt / tg - self.intercept) / self.slope * tg


def fit_ratio_linear(table: dict[str, np.ndarray]) -> RatioLinearModel:
    """OLS of sprt/tg on rt/tg over non-censored rows."""
    keep = ~np.isnan(table["sprt"])
    x = (table["rt"] / table["tg"])[keep]
    y = (table["sprt"] / table["tg"])[keep]
    if len(np.unique(x)) < 2:
        raise DegenerateModel("need at least 2 distinct rt/tg values")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_total = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_total if ss_total > 0 else 1.0
    return RatioLinearModel(intercept=float(intercept), slope=float(slope),
                            r_squared=r2)


def recommend_tg(model: LogisticVisibilityModel, expected_rt: float,
                 target_p: float) -> int:
    """Largest granularity keeping visibility probability at target_p.

    floor(expected_rt / ratio_at(target_p)), clamped to at least 1.
    """
    if not 0.0 < target_p < 1.0:
        raise ValueError(f"target_p must be in (0, 1), got {target_p}")
    if model.slope <= 0:
        raise DegenerateModel("visibility must increase with the ratio")
    ratio = model.ratio_at(target_p)
    if ratio <= 0:
        raise DegenerateModel(
            f"target likelihood {target_p} is met at any granularity")
    # Tiny guard so quotients that are mathematically integral do not
    # floor one short after rounding (e.g. 22/0.88).
    return max(1, math.floor(expected_rt / ratio + 1e-9))


def analysis_report(table: dict[str, np.ndarray]) -> dict:
    """The full report: variance shares, logistic fit, ratio model."""
    sprt_rows = {k: v[~np.isnan(table["sprt"])] for k, v in table.items()}
    ratio_table = dict(sprt_rows)
    ratio_table["rt_over_tg"] = sprt_rows["rt"] / sprt_rows["tg"]
    ratio_table["sprt_over_tg"] = sprt_rows["sprt"] / sprt_rows["tg"]

    report: dict = {}
    for response, tab in (("spds", table), ("sprt", sprt_rows)):
        shares = variance_shares(tab, response)
        report[f"variance_shares_{response}"] = {
            "terms": shares.shares, "residual": shares.residual_share}
    ratio_shares = variance_shares(
        {"tg": ratio_table["tg"], "rt": ratio_table["rt_over_tg"],
         "ds": ratio_table["ds"], "sprt_over_tg": ratio_table["sprt_over_tg"]},
        "sprt_over_tg", terms=("rt", "ds", "tg"))
    report["variance_shares_sprt_over_tg"] = {
        "terms": {"rt_over_tg": ratio_shares.shares["rt"],
                  "ds": ratio_shares.shares["ds"],
                  "tg": ratio_shares.shares["tg"]},
        "residual": ratio_shares.residual_share}

    logistic = fit_visibility_logistic(table)
    report["visibility_logistic"] = {
        "intercept": logistic.intercept,
        "slope": logistic.slope,
        "ratio_at_half_likelihood": logistic.threshold,
        "granularity_over_rt_bound": (1.0 / logistic.threshold
                                      if logistic.threshold > 0 else None),
    }
    linear = fit_ratio_linear(table)
    report["ratio_linear"] = {
        "intercept": linear.intercept,
        "slope": linear.slope,
        "r_squared": linear.r_squared,
    }
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def visibility_curve_csv(model: LogisticVisibilityModel,
                         max_ratio: float, points: int = 200) -> str:
    buf = io.StringIO()
    buf.write("ratio,probability\n")
    for ratio in np.linspace(0.0, max_ratio, points):
        buf.write(f"{ratio:.6f},{float(model.probability(ratio)):.6f}\n")
    return buf.getvalue()


def ratio_scatter_csv(table: dict[str, np.ndarray]) -> str:
    keep = ~np.isnan(table["sprt"])
    buf = io.StringIO()
    buf.write("rt_over_tg,sprt_over_tg\n")
    for xv, yv in zip((table["rt"] / table["tg"])[keep],
                      (table["sprt"] / table["tg"])[keep]):
        buf.write(f"{xv:.6f},{yv:.6f}\n")
    return buf.getvalue()
