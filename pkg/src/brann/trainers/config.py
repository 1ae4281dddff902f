from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field


class AlgorithmKind(str, enum.Enum):
    TRAINBR = "trainbr"
    TRAINGDM = "traingdm"
    TRAINGDA = "traingda"
    TRAINGDX = "traingdx"
    TRAINLM = "trainlm"
    TRAINRP = "trainrp"
    TRAINCGF = "traincgf"
    TRAINCGB = "traincgb"
    TRAINSCG = "trainscg"
    TRAINCGP = "traincgp"
    TRAINBFG = "trainbfg"

    @classmethod
    def parse(cls, name: str) -> "AlgorithmKind":
        # "trainml" is a common misspelling of the Levenberg-Marquardt trainer
        name = name.strip().lower()
        if name == "trainml":
            name = "trainlm"
        return cls(name)

    @property
    def uses_lm(self) -> bool:
        return self in (AlgorithmKind.TRAINBR, AlgorithmKind.TRAINLM)


FIRST_ORDER_KINDS = tuple(k for k in AlgorithmKind if not k.uses_lm)


class StopReason(str, enum.Enum):
    MAX_EPOCHS = "max_epochs"
    GRAD_TOL = "grad_tol"
    MU_MAX = "mu_max"
    PLATEAU = "plateau"


@dataclass(frozen=True)
class StoppingRule:
    grad_tol: float = 1e-7
    mu_max: float = 1e10
    plateau_epochs: int = 5
    plateau_rel_tol: float = 1e-6

    def __post_init__(self):
        if min(self.grad_tol, self.mu_max, self.plateau_rel_tol) <= 0 or self.plateau_epochs < 1:
            raise ValueError("stopping-rule fields must be positive")


@dataclass(frozen=True)
class TrainingConfig:
    """Algorithm choice plus every tunable the trainers read.

    Defaults follow the conventional toolbox values for each method.
    """

    algorithm: AlgorithmKind = AlgorithmKind.TRAINBR
    max_epochs: int = 1000
    seed: int = 0
    stop: StoppingRule = field(default_factory=StoppingRule)
    # Levenberg-Marquardt family
    mu: float = 0.005
    mu_inc: float = 10.0
    mu_dec: float = 10.0
    max_rejections: int = 10
    # gradient descent family
    lr: float = 0.01
    momentum: float = 0.9
    lr_inc: float = 1.05
    lr_dec: float = 0.7
    max_perf_inc: float = 1.04
    # Rprop
    delta0: float = 0.07
    delta_min: float = 1e-6
    delta_max: float = 50.0
    eta_plus: float = 1.2
    eta_minus: float = 0.5
    # line search (CG / BFGS)
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    # scaled conjugate gradient
    scg_sigma: float = 5e-5
    scg_lambda: float = 5e-7

    def __post_init__(self):
        object.__setattr__(self, "algorithm", AlgorithmKind.parse(str(getattr(self.algorithm, "value", self.algorithm))))
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        positive = ("mu", "mu_inc", "mu_dec", "lr", "lr_inc", "lr_dec", "max_perf_inc",
                    "delta0", "delta_min", "delta_max", "eta_plus", "eta_minus",
                    "wolfe_c1", "wolfe_c2", "scg_sigma", "scg_lambda")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be >= 1")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["algorithm"] = self.algorithm.value
        return d
