"""
Experiment driver for the regularized Cauchy solver.

An ExperimentConfig fixes the domain, the basis, the manufactured cases and
the sweep parameters. The run_* functions turn it into flat result rows,
one dataclass per output table, and emit writes them as CSV or JSON. A row
that cannot be computed is written with a failure marker instead of
aborting the sweep.
"""

import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np
import pandas as pd

from src.cauchy.cauchy_forward import (
    ManufacturedCase,
    PicardControls,
    derivative_trajectory,
    manufacture,
    propagate_exact,
    uniform_grid,
)
from src.cauchy.errors import OverflowGuardError, PicardConvergenceError
from src.cauchy.gevrey_criteria import CriterionReport, criterion_A, verify_bounds
from src.cauchy.kernel_reg import BetaRule, RegConfig, perturb, regularized_solve
from src.cauchy.spectral import BoxDomain, SpectralBasis, build_basis
from src.config.config import (
    CASE_KINDS,
    DEFAULT_A,
    DEFAULT_BETA_RULE,
    DEFAULT_CASES,
    DEFAULT_DIMS,
    DEFAULT_EPSILONS,
    DEFAULT_GAMMAS,
    DEFAULT_K,
    DEFAULT_K_VALUES,
    DEFAULT_MAX_INDEX,
    DEFAULT_NX,
    DEFAULT_SEED,
    EVALUATION_FRACTIONS,
    NONLINEARITY_KINDS,
    OUTPUT_FORMATS,
    OVERFLOW_GUARD,
    PICARD_MAX_ITERS,
    PICARD_TOL,
    REFERENCE_REFINEMENT,
    RESULT_COLUMNS,
)
from src.data_utils.formatters import abscissa_label, format_float
from src.data_utils.loaders import save_json, save_table

logger = logging.getLogger(__name__)

RECOVERABLE_ERRORS = (PicardConvergenceError, OverflowGuardError, ValueError)


@dataclass(frozen=True)
class CaseSpec:
    """
    Parameters of one manufactured case.

    Attributes:
        case_id (str): Name used in result rows.
        kind (str): One of CASE_KINDS.
        modes (int): Leading modes carrying data.
        seed (int): Seed of the data draw.
        amplitude (float): Data amplitude.
        nonlinearity (str): Nonlinearity name for the nonlinear kind.
    """

    case_id: str
    kind: str
    modes: int = 3
    seed: int = 0
    amplitude: float = 1.0
    nonlinearity: str = "sine"

    def __post_init__(self):
        if self.kind not in CASE_KINDS:
            raise ValueError(
                f"Unknown case kind '{self.kind}' in case '{self.case_id}'. "
                f"Expected one of {CASE_KINDS}"
            )
        if self.nonlinearity not in NONLINEARITY_KINDS:
            raise ValueError(
                f"Unknown nonlinearity '{self.nonlinearity}' in case '{self.case_id}'. "
                f"Expected one of {NONLINEARITY_KINDS}"
            )
        if self.kind == "nonlinear" and self.nonlinearity == "zero":
            raise ValueError(
                f"Nonlinear case '{self.case_id}' needs a nonzero nonlinearity"
            )
        if self.modes < 0:
            raise ValueError(f"modes must be >= 0 in case '{self.case_id}'")

    @classmethod
    def from_dict(cls, entry: Dict[str, Any]) -> "CaseSpec":
        """Builds a spec from a config entry; case_id defaults to the kind."""
        try:
            kind = entry["kind"]
        except KeyError as e:
            raise ValueError(f"Case entry {entry} has no 'kind'") from e
        known = {f.name for f in fields(cls)}
        unknown = set(entry) - known
        if unknown:
            raise ValueError(f"Unknown case keys {sorted(unknown)} in {entry}")
        return cls(**{"case_id": kind, **entry})


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Full description of an experiment run.

    Defaults come from src.config.config; from_dict overlays a JSON
    document and with_overrides applies command-line flags.
    """

    dims: Tuple[float, ...] = tuple(DEFAULT_DIMS)
    a: float = DEFAULT_A
    max_index: Tuple[int, ...] = tuple(DEFAULT_MAX_INDEX)
    cases: Tuple[CaseSpec, ...] = tuple(CaseSpec.from_dict(c) for c in DEFAULT_CASES)
    k: int = DEFAULT_K
    k_values: Tuple[int, ...] = tuple(DEFAULT_K_VALUES)
    beta_rule: str = DEFAULT_BETA_RULE
    beta: Optional[float] = None
    epsilons: Tuple[float, ...] = tuple(DEFAULT_EPSILONS)
    eps: Optional[float] = None
    nx: int = DEFAULT_NX
    gammas: Tuple[float, ...] = tuple(DEFAULT_GAMMAS)
    seed: int = DEFAULT_SEED
    out: Optional[str] = None
    file_format: str = "csv"
    picard_max_iters: int = PICARD_MAX_ITERS
    picard_tol: float = PICARD_TOL
    record_timing: bool = False
    debug_scale_ux: float = 1.0
    reference_refinement: int = REFERENCE_REFINEMENT
    domain: BoxDomain = field(init=False, repr=False, compare=False)
    basis: SpectralBasis = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("dims", "max_index", "k_values", "epsilons", "gammas", "cases"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "domain", BoxDomain(self.dims, self.a))
        object.__setattr__(self, "basis", build_basis(self.domain, self.max_index))
        self._validate()

    def _validate(self):
        epsilons = np.asarray(self.epsilons, dtype=float)
        if epsilons.size == 0 or np.any(epsilons <= 0):
            raise ValueError(
                f"Epsilon ladder must be nonempty and positive, got {self.epsilons}"
            )
        if np.any(np.diff(epsilons) >= 0):
            raise ValueError(
                f"Epsilon ladder must be strictly decreasing, got {self.epsilons}"
            )
        if self.eps is not None and self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.nx < 4 or self.nx % 4:
            raise ValueError(f"nx must be a positive multiple of 4, got {self.nx}")
        if self.k < 1 or any(k < 1 for k in self.k_values):
            raise ValueError("Kernel and Sobolev orders must be >= 1")
        if any(gamma < 1 for gamma in self.gammas):
            raise ValueError(f"gammas must be >= 1, got {self.gammas}")
        if self.file_format not in OUTPUT_FORMATS:
            raise ValueError(
                f"Unknown output format '{self.file_format}'. "
                f"Expected one of {OUTPUT_FORMATS}"
            )
        if self.beta is not None and not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        BetaRule.parse(self.beta_rule)
        ids = [case.case_id for case in self.cases]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Case ids must be unique, got {ids}")
        exponent = float(self.basis.sqrt_eigenvalues[-1] * self.a)
        if exponent > OVERFLOW_GUARD:
            raise ValueError(
                f"sqrt(lambda_P) * a = {exponent:.1f} exceeds the overflow guard "
                f"{OVERFLOW_GUARD}; reduce max_index or a"
            )

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "ExperimentConfig":
        """
        Builds a config from a JSON document; missing keys take defaults.

        Args:
            document (Dict[str, Any]): Parsed config file.

        Returns:
            ExperimentConfig: The validated config.

        Raises:
            ValueError: On unknown keys or invalid values.
        """
        known = {f.name for f in fields(cls) if f.init}
        unknown = set(document) - known
        if unknown:
            raise ValueError(f"Unknown config keys {sorted(unknown)}")
        values = dict(document)
        if "cases" in values:
            values["cases"] = [CaseSpec.from_dict(entry) for entry in values["cases"]]
        return cls(**values)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with the non-None overrides applied."""
        applied = {
            name: value for name, value in overrides.items() if value is not None
        }
        return replace(self, **applied) if applied else self

    def select_cases(self, case_ids: Optional[Sequence[str]]) -> "ExperimentConfig":
        """Copy restricted to the named cases, in config order."""
        if not case_ids:
            return self
        known = {case.case_id for case in self.cases}
        missing = [case_id for case_id in case_ids if case_id not in known]
        if missing:
            raise ValueError(
                f"Unknown case ids {missing}. Expected some of {sorted(known)}"
            )
        return replace(self, cases=[c for c in self.cases if c.case_id in case_ids])

    @property
    def picard(self) -> PicardControls:
        """Picard controls of the run."""
        return PicardControls(self.picard_max_iters, self.picard_tol)

    @property
    def xs(self) -> np.ndarray:
        """Uniform x-grid."""
        return uniform_grid(self.a, self.nx)

    @property
    def evaluation_nodes(self) -> List[Tuple[float, int]]:
        """(fraction, node index) of the evaluation abscissae."""
        return [
            (fraction, int(round(fraction * self.nx)))
            for fraction in EVALUATION_FRACTIONS
        ]

    def reg_config(self, k: int, beta: Optional[float] = None) -> RegConfig:
        """Regularized-solver settings for order k; beta overrides the rule."""
        return RegConfig(
            k=k,
            beta=beta if beta is not None else self.beta,
            picard=self.picard,
            beta_rule=BetaRule.parse(self.beta_rule),
        )


@dataclass(frozen=True)
class ResultRow:
    """One regularized-error measurement; field order is the CSV header."""

    case: str
    epsilon: float
    beta: float
    k: int
    x: float
    error: float
    A: float  # pylint: disable=invalid-name
    rhs: float
    margin: float
    iters: int
    ms: int


@dataclass(frozen=True)
class VerifyRow:
    """
    One evaluated inequality or reported quantity.

    Rows with asserted = False carry a value in lhs (rhs and margin nan) and
    never count as failures.
    """

    case: str
    k: int
    gamma: float
    check: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    asserted: bool = True

    @property
    def failed(self) -> bool:
        """True for an asserted check that did not hold."""
        return self.asserted and not self.passed


@dataclass(frozen=True)
class CriterionRow:
    """A or A^gamma with its attaining node and last-mode share."""

    case: str
    k: int
    gamma: float
    value: float
    x: float
    tail: float


@dataclass(frozen=True)
class TrajectoryRow:
    """One coefficient of the exact solution and its derivative."""

    case: str
    x: float
    mode: int
    index: str
    eigenvalue: float
    u: float
    ux: float


@dataclass(frozen=True)
class ConvergenceSummary:
    """Log-log slopes of error against epsilon, keyed by abscissa label."""

    case: str
    slopes: Dict[str, float]


def _noise_seed(config: ExperimentConfig, case: CaseSpec, step: int) -> int:
    sequence = np.random.SeedSequence([config.seed, case.seed, step])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def build_case(config: ExperimentConfig, spec: CaseSpec) -> ManufacturedCase:
    """Manufactures a case on the config grid."""
    return manufacture(
        spec.kind,
        config.basis,
        config.nx,
        modes=spec.modes,
        seed=spec.seed,
        amplitude=spec.amplitude,
        nonlinearity=spec.nonlinearity,
        case_id=spec.case_id,
        controls=config.picard,
        refinement=config.reference_refinement,
    )


def _failed_rows(
    config: ExperimentConfig, spec: CaseSpec, epsilon: float, beta: float
) -> List[ResultRow]:
    return [
        ResultRow(
            case=spec.case_id,
            epsilon=epsilon,
            beta=beta,
            k=config.k,
            x=fraction * config.a,
            error=math.nan,
            A=math.nan,
            rhs=math.nan,
            margin=math.nan,
            iters=-1,
            ms=0,
        )
        for fraction, _ in config.evaluation_nodes
    ]


def _regularized_rows(
    config: ExperimentConfig,
    spec: CaseSpec,
    case: ManufacturedCase,
    report: CriterionReport,
    epsilon: float,
    step: int,
) -> List[ResultRow]:
    beta = math.nan
    try:
        cfg = config.reg_config(config.k, beta=0.0 if epsilon == 0 else None)
        beta = cfg.resolve_beta(epsilon)
        noisy = perturb(case.data, epsilon, _noise_seed(config, spec, step))
        start = time.perf_counter()
        u_eps = regularized_solve(
            noisy, case.nonlinearity, cfg, config.basis, config.xs
        )
        elapsed = (time.perf_counter() - start) * 1e3
    except RECOVERABLE_ERRORS as e:
        logger.warning(f"Case '{spec.case_id}', epsilon = {epsilon:g}: row failed: {e}")
        return _failed_rows(config, spec, epsilon, beta)

    ms = int(round(elapsed)) if config.record_timing else 0
    rows = []
    for fraction, i in config.evaluation_nodes:
        error = float(np.linalg.norm(u_eps.values[i] - case.u_ref.values[i]))
        rows.append(
            ResultRow(
                case=spec.case_id,
                epsilon=float(epsilon),
                beta=float(beta),
                k=config.k,
                x=float(config.xs[i]),
                error=error,
                A=report.A,
                rhs=report.rhs_theorem,
                margin=report.margin,
                iters=u_eps.iterations,
                ms=ms,
            )
        )
    return rows


def _case_report(config: ExperimentConfig, case: ManufacturedCase) -> CriterionReport:
    return verify_bounds(case, config.k, gammas=())


def _loglog_slopes(config: ExperimentConfig, rows: List[ResultRow]) -> Dict[str, float]:
    slopes = {}
    for fraction, _ in config.evaluation_nodes:
        x = fraction * config.a
        points = [
            (math.log(row.epsilon), math.log(row.error))
            for row in rows
            if math.isclose(row.x, x) and row.epsilon > 0 and row.error > 0
        ]
        label = abscissa_label(fraction)
        if len(points) < 2:
            slopes[label] = math.nan
            continue
        log_eps, log_err = np.array(points).T
        slopes[label] = float(np.polyfit(log_eps, log_err, 1)[0])
    return slopes


def run_convergence(
    config: ExperimentConfig,
) -> Tuple[List[ResultRow], List[ConvergenceSummary]]:
    """
    Error of the regularized solution along the epsilon ladder.

    For every case and every epsilon (ladder order, followed by the
    epsilon = 0, beta = 0 oracle row) the case data are perturbed, solved
    with the regularized kernel and compared with the reference at
    x in {a/4, a/2, 3a/4, a}.

    Args:
        config (ExperimentConfig): The experiment.

    Returns:
        Tuple[List[ResultRow], List[ConvergenceSummary]]: Rows and per-case
            log-log slopes of the error against epsilon.
    """
    rows: List[ResultRow] = []
    summaries: List[ConvergenceSummary] = []
    ladder = list(config.epsilons) + [0.0]
    for spec in config.cases:
        logger.info(
            f"Convergence sweep for case '{spec.case_id}' ({len(ladder)} levels)"
        )
        try:
            case = build_case(config, spec)
            report = _case_report(config, case)
        except RECOVERABLE_ERRORS as e:
            logger.warning(f"Case '{spec.case_id}' could not be built: {e}")
            for epsilon in ladder:
                rows.extend(_failed_rows(config, spec, epsilon, math.nan))
            slopes = _loglog_slopes(config, [])
            summaries.append(ConvergenceSummary(spec.case_id, slopes))
            continue
        case_rows = []
        for step, epsilon in enumerate(ladder):
            case_rows.extend(
                _regularized_rows(config, spec, case, report, epsilon, step)
            )
        rows.extend(case_rows)
        summary = ConvergenceSummary(spec.case_id, _loglog_slopes(config, case_rows))
        rendered = ", ".join(
            f"{label} {format_float(slope, '%.3f')}"
            for label, slope in summary.slopes.items()
        )
        logger.info(f"Case '{spec.case_id}': log-log slopes {rendered}")
        summaries.append(summary)
    return rows, summaries


def run_regularize(config: ExperimentConfig) -> List[ResultRow]:
    """
    One regularized solve per case at noise level config.eps.

    Defaults to the first ladder entry when eps is not set.
    """
    epsilon = config.eps if config.eps is not None else config.epsilons[0]
    rows: List[ResultRow] = []
    for spec in config.cases:
        try:
            case = build_case(config, spec)
            report = _case_report(config, case)
        except RECOVERABLE_ERRORS as e:
            logger.warning(f"Case '{spec.case_id}' could not be built: {e}")
            rows.extend(_failed_rows(config, spec, epsilon, math.nan))
            continue
        rows.extend(_regularized_rows(config, spec, case, report, epsilon, 0))
    return rows


def _reported_rows(case_id: str, k: int, report: CriterionReport) -> List[VerifyRow]:
    quantities = [("sobolev_sup", report.sobolev_sup)]
    if report.log_rhs_lipschitz is not None:
        quantities.insert(0, ("lipschitz_bound", report.rhs_lipschitz))
    return [
        VerifyRow(
            case_id, k, 1.0, name, value, math.nan, math.nan, True, asserted=False
        )
        for name, value in quantities
    ]


def run_verify(
    config: ExperimentConfig,
) -> Tuple[List[CriterionReport], List[VerifyRow]]:
    """
    Checks the regularity bounds on every case, k and gamma.

    A case that cannot be built contributes a failed "build" row.

    Returns:
        Tuple[List[CriterionReport], List[VerifyRow]]: Reports and flat rows.
    """
    reports: List[CriterionReport] = []
    rows: List[VerifyRow] = []
    for spec in config.cases:
        try:
            case = build_case(config, spec)
        except RECOVERABLE_ERRORS as e:
            logger.warning(f"Case '{spec.case_id}' could not be built: {e}")
            rows.append(
                VerifyRow(
                    spec.case_id,
                    0,
                    math.nan,
                    "build",
                    math.nan,
                    math.nan,
                    math.nan,
                    False,
                )
            )
            continue
        for k in config.k_values:
            report = verify_bounds(
                case, k, config.gammas, ux_scale=config.debug_scale_ux
            )
            reports.append(report)
            for check in report.checks:
                rows.append(
                    VerifyRow(
                        spec.case_id,
                        k,
                        1.0 if check.gamma is None else check.gamma,
                        check.name,
                        check.lhs,
                        check.rhs,
                        check.margin,
                        check.passed,
                    )
                )
            rows.extend(_reported_rows(spec.case_id, k, report))
    asserted = sum(row.asserted for row in rows)
    failed = sum(row.failed for row in rows)
    logger.info(f"Verified {asserted} inequalities, {failed} failed")
    return reports, rows


def run_criterion(config: ExperimentConfig) -> List[CriterionRow]:
    """A and A^gamma of every case for every k and gamma."""
    rows: List[CriterionRow] = []
    for spec in config.cases:
        try:
            case = build_case(config, spec)
        except RECOVERABLE_ERRORS as e:
            logger.warning(f"Case '{spec.case_id}' could not be built: {e}")
            continue
        for k in config.k_values:
            for gamma in config.gammas:
                report = criterion_A(
                    case.u_ref, case.ux_ref, k, case.basis, gamma=gamma
                )
                rows.append(
                    CriterionRow(
                        case=spec.case_id,
                        k=k,
                        gamma=float(gamma),
                        value=report.A,
                        x=report.x_argmax,
                        tail=report.per_mode_tail,
                    )
                )
    return rows


def run_solve(config: ExperimentConfig) -> List[TrajectoryRow]:
    """Exact u and u_x of every case at every grid node and mode."""
    rows: List[TrajectoryRow] = []
    basis = config.basis
    xs = config.xs
    for spec in config.cases:
        try:
            case = build_case(config, spec)
            u = propagate_exact(case.data, case.nonlinearity, basis, xs, config.picard)
            ux = derivative_trajectory(
                case.data, case.nonlinearity, u, basis, xs, config.picard
            )
        except RECOVERABLE_ERRORS as e:
            logger.warning(f"Case '{spec.case_id}' could not be solved: {e}")
            continue
        logger.info(f"Case '{spec.case_id}': {u.iterations} Picard sweeps")
        for i, x in enumerate(xs):
            for p in range(basis.P):
                rows.append(
                    TrajectoryRow(
                        case=spec.case_id,
                        x=float(x),
                        mode=p + 1,
                        index=basis.mode_label(p),
                        eigenvalue=float(basis.eigenvalues[p]),
                        u=float(u.values[i, p]),
                        ux=float(ux.values[i, p]),
                    )
                )
    return rows


def rows_to_frame(rows: Sequence[Any], row_type: Type) -> pd.DataFrame:
    """Table with one column per dataclass field, in field order."""
    columns = [f.name for f in fields(row_type)]
    if row_type is ResultRow and columns != RESULT_COLUMNS:
        raise ValueError(f"ResultRow fields {columns} differ from {RESULT_COLUMNS}")
    return pd.DataFrame([asdict(row) for row in rows], columns=columns)


def emit(
    rows: Sequence[Any], path: str, file_format: str, row_type: Optional[Type] = None
) -> str:
    """
    Writes rows as CSV (17 significant digits) or as a JSON list.

    Args:
        rows (Sequence[Any]): Dataclass rows of one type.
        path (str): Output file path.
        file_format (str): "csv" or "json".
        row_type (Optional[Type]): Row dataclass; needed when rows is empty.

    Returns:
        str: The path written.
    """
    if row_type is None:
        if not rows:
            raise ValueError("row_type is required for an empty table")
        row_type = type(rows[0])
    directory, filename = os.path.split(path)
    frame = rows_to_frame(rows, row_type)
    return save_table([directory] if directory else [], filename, frame, file_format)


def emit_summaries(summaries: Sequence[ConvergenceSummary], path: str) -> str:
    """Writes convergence slopes next to the table as <stem>_summary.json."""
    stem, _ = os.path.splitext(path)
    directory, filename = os.path.split(f"{stem}_summary.json")
    document = {
        summary.case: {
            label: (None if math.isnan(slope) else slope)
            for label, slope in summary.slopes.items()
        }
        for summary in summaries
    }
    return save_json([directory] if directory else [], filename, document)
