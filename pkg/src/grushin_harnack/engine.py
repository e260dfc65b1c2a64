"""Structural-constant calculus for the abstract Harnack machinery.

Given the primitive constants of the double ball and critical density
properties together with the quasi-metric constants (K, α, β, C_D, δ), this
module derives every constant used on the way to power decay and to the
Harnack inequality.  Wherever the theory only asks for a strict inequality
(``M > ...``, ``c1 < ...``) a deterministic representative is chosen:
the smallest power-of-two multiple, half or twice the bound, or ceiling + 1.

Several constants are astronomically large.  They are carried as natural
logarithms (``log_*`` fields); the plain value overflows to ``inf`` when it
does not fit in a double.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class HypothesisViolationError(ValueError):
    pass


class ConstantInconsistencyError(ArithmeticError):
    """A derived sequence left its admissible range (the chosen M is too small)."""


class UsageError(ValueError):
    pass


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class DBConstants:
    gamma: float
    eps: float
    eta: float


@dataclass(frozen=True)
class CDConstants:
    nu: float
    c: float
    eps: float
    eta: float


@dataclass(frozen=True)
class DBCDInput:
    """Shared (γ, c, ε, η, ν) after putting DB and CD on common (ε, η)."""

    gamma: float
    c: float
    eps: float
    eta: float
    nu: float

    def __post_init__(self):
        for name in ("gamma", "c", "eps", "nu"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not self.eta > 1:
            raise ValueError(f"eta must exceed 1, got {self.eta}")

    @classmethod
    def from_properties(cls, db: DBConstants, cd: CDConstants) -> "DBCDInput":
        return cls(gamma=db.gamma, c=cd.c, eps=min(db.eps, cd.eps),
                   eta=max(db.eta, cd.eta), nu=cd.nu)


@dataclass
class LedgerEntry:
    name: str
    value: object
    formula: str
    paper_anchor: str

    def to_dict(self):
        v = self.value
        if isinstance(v, float) and not math.isfinite(v):
            v = repr(v)
        return {"name": self.name, "value": v, "formula": self.formula,
                "paper_anchor": self.paper_anchor}


@dataclass
class ConstantLedger:
    """Named constants with the formula that produced each one."""

    entries: dict[str, LedgerEntry] = field(default_factory=dict)

    def record(self, name, value, formula, anchor):
        self.entries[name] = LedgerEntry(name, value, formula, anchor)
        return value

    def __getitem__(self, name):
        return self.entries[name].value

    def __contains__(self, name):
        return name in self.entries

    def __iter__(self) -> Iterator[LedgerEntry]:
        return iter(self.entries.values())

    def to_list(self):
        return [e.to_dict() for e in self]

    def to_json(self, **kw) -> str:
        return json.dumps({"schema_version": "1.0", "constants": self.to_list()},
                          sort_keys=True, **kw)


def cd_implies_db(nu: float, C_D: float, cd: CDConstants) -> DBConstants:
    """Double ball constants implied by critical density when ν < 1/C_D².

    The doubled enlargement is read as 2·η_CD.
    """
    if not nu < 1.0 / C_D**2:
        raise HypothesisViolationError(f"nu={nu} must be below 1/C_D^2={1.0 / C_D**2:.6g}")
    return DBConstants(gamma=cd.c, eps=cd.eps, eta=2.0 * cd.eta)


def derive_m0_sigma_m1_theta(inp: DBCDInput, K: float, ledger: ConstantLedger | None = None):
    ledger = ConstantLedger() if ledger is None else ledger
    M0 = ledger.record("M0", 1.0 / (inp.gamma * inp.c), "1/(gamma*c)", "alpha-scaling proposition")
    sig = ledger.record("sigma_exp", -math.log(2.0) / math.log(inp.gamma), "-ln2/ln(gamma)",
                        "radius lemma")
    ledger.record("M1", (4.0 * K) ** (1.0 / sig) * M0, "(4K)^(1/sigma)*M0", "radius lemma")
    ledger.record("theta", K * (1.0 + 4.0 * inp.eta * K), "K(1+4*eta*K)", "radius lemma")
    return ledger


def _beta1(K, alpha_h, beta_h, M1, sig):
    return (2.0 * K) ** (alpha_h - 1.0) * beta_h * M1 ** (sig * alpha_h) \
        * (1.0 + M1**sig) ** (1.0 - alpha_h)


def _pd_conditions(beta1, q):
    # β₁q² < 1/4 and β₁q³·Σ_{j≥0} q^j < 1/4 (the second keeps every T_k above 1/2)
    return beta1 * q * q < 0.25 and beta1 * q**3 / (1.0 - q) < 0.25


def choose_M(inp: DBCDInput, K: float, alpha_h: float, beta_h: float,
             ledger: ConstantLedger | None = None) -> ConstantLedger:
    """Smallest M = M0·2^j (j >= 1) meeting the two smallness conditions."""
    ledger = ConstantLedger() if ledger is None else ledger
    if "M0" not in ledger:
        derive_m0_sigma_m1_theta(inp, K, ledger)
    M0, sig, M1 = ledger["M0"], ledger["sigma_exp"], ledger["M1"]
    beta1 = ledger.record("beta1", _beta1(K, alpha_h, beta_h, M1, sig),
                          "(2K)^(alpha-1)*beta*M1^(sigma*alpha)*(1+M1^sigma)^(1-alpha)",
                          "power decay theorem")
    j = 1
    while True:
        M = M0 * 2.0**j
        q = M ** (-sig * alpha_h)
        if q < 1.0 and _pd_conditions(beta1, q):
            break
        j += 1
    ledger.record("M", M, f"M0*2^{j}, least with beta1*q^2<1/4 and beta1*q^3/(1-q)<1/4",
                  "power decay theorem")
    ledger.record("q_pd", q, "M^(-sigma*alpha)", "power decay theorem")
    ledger.record("T_limit", 0.75 - beta1 * q**3 / (1.0 - q), "3/4 - beta1*q^3/(1-q)",
                  "power decay theorem")
    return ledger


def tk_sequence(M: float, beta1: float, q_pd: float, k_max: int) -> np.ndarray:
    """Radii fractions T_1..T_kmax with T_1 = 3/4, T_{k+1} = T_k - β₁ q^(k+2)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    k = np.arange(1, k_max)
    steps = beta1 * q_pd ** (k + 2.0)
    T = np.empty(k_max)
    T[0] = 0.75
    T[1:] = 0.75 - np.cumsum(steps)
    if np.any(T <= 0.5):
        bad = int(np.argmax(T <= 0.5)) + 1
        raise ConstantInconsistencyError(f"T_{bad} = {T[bad - 1]} <= 1/2; M={M} is too small")
    return T


@dataclass(frozen=True)
class PowerDecayConstants:
    M: float
    gamma: float
    eps_P: float
    eta_P: float
    k0: int
    M_base: float
    log_M: float


def default_c_nu(nu: float, C_D: float) -> float:
    """Placeholder covering contraction factor 1 - ν/(2 C_D²)."""
    return 1.0 - nu / (2.0 * C_D**2)


def derive_power_decay(inp: DBCDInput, K: float, alpha_h: float, beta_h: float, C_D: float,
                       delta_rd: float, hypotheses: str, c_nu: float | None = None,
                       ledger: ConstantLedger | None = None):
    """Power decay constants (M, γ, ε_P, η_P) under hypothesis set "A" or "B".

    Set A: DB and CD plus the ring rate ω(s) = o(log⁻²(1/s)), asserted by
    the caller.  Set B: CD with ν < 1/C_D² and continuous r ↦ μ(B_r).
    """
    if hypotheses not in ("A", "B"):
        raise UsageError("assert hypothesis set 'A' or 'B'")
    if hypotheses == "B" and not inp.nu < 1.0 / C_D**2:
        raise HypothesisViolationError("set B requires nu < 1/C_D^2")
    if not 0 < delta_rd < 1:
        raise ValueError("delta_rd must lie in (0, 1)")
    ledger = ConstantLedger() if ledger is None else ledger
    choose_M(inp, K, alpha_h, beta_h, ledger)
    theta = ledger["theta"]
    base = max(K * (3.0 * inp.eta * K + 1.0), theta)
    if hypotheses == "A":
        eta_P = ledger.record("eta_P", base + 1.0, "max{K(3*eta*K+1), theta} + 1",
                              "power decay theorem")
    else:
        eta_P = ledger.record("eta_P", 2.0 * base, "2*max{K(3*eta*K+1), theta}",
                              "power decay theorem")
    eps_P = ledger.record("eps_P", inp.eps * inp.c, "eps*c", "power decay theorem")
    nu_eff = max(inp.nu, delta_rd)
    if c_nu is None:
        c_nu = default_c_nu(nu_eff, C_D)
    if not 0 < c_nu < 1:
        raise ValueError("c(nu) must lie in (0, 1)")
    ledger.record("c_nu", c_nu, "covering contraction (external input)", "power decay theorem")
    k0 = 1
    while c_nu**k0 * C_D >= 1.0:
        k0 += 1
    ledger.record("k0_pd", k0, "least k with c(nu)^k * C_D < 1", "power decay theorem")
    M = ledger["M"]
    log_M = (k0 + 2) * math.log(M)
    ledger.record("M_pd", _exp(log_M), "M^(k0+2)", "power decay theorem")
    ledger.record("log_M_pd", log_M, "(k0+2)*ln M", "power decay theorem")
    ledger.record("log10_M_pd", log_M / math.log(10.0), "log10 M_pd", "power decay theorem")
    ledger.record("gamma_pd", c_nu, "c(nu)", "power decay theorem")
    ledger.record("T", tk_sequence(M, ledger["beta1"], ledger["q_pd"], 10).tolist(),
                  "T_1=3/4, T_{k+1}=T_k-beta1*q^(k+2)", "power decay theorem")
    pd = PowerDecayConstants(M=_exp(log_M), gamma=c_nu, eps_P=eps_P, eta_P=eta_P, k0=k0,
                             M_base=M, log_M=log_M)
    return pd, ledger


@dataclass(frozen=True)
class HarnackConstants:
    eta_harnack: float
    c1: float
    delta_exp: float
    beta_star: float
    k0: int
    C_harnack: float
    log_C_harnack: float
    log_beta_star: float


def _log_one_minus_pow(log_M: float, expo: float) -> float:
    """ln(1 - (1 + 1/M)^(-expo)) for M = exp(log_M), stable for huge M."""
    y = math.log1p(math.exp(-log_M)) if log_M < 700 else 0.0
    log_y = math.log(y) if y > 0 else -log_M
    log_x = math.log(expo) + log_y
    if log_x < -700:
        return log_x
    return math.log(-math.expm1(-math.exp(log_x)))


def derive_harnack(pd: PowerDecayConstants, K: float, C_D: float, alpha_h: float,
                   beta_h: float, ledger: ConstantLedger | None = None):
    """Harnack enlargement η and constant C from power decay constants."""
    gamma = pd.gamma
    if not 0 < gamma < 1:
        raise ValueError("power decay gamma must lie in (0, 1)")
    ledger = ConstantLedger() if ledger is None else ledger
    q = math.log2(C_D)
    eta_h = ledger.record("eta_harnack", 2.0 * K * (2.0 * K * pd.eta_P + 1.0),
                          "2K(2K*eta_P+1)", "Harnack theorem")
    bound_c1 = (gamma ** (1 / q) * (1 - gamma) ** (1 / q)) / (C_D ** (1 / q) * 4 * K * pd.eta_P)
    c1 = ledger.record("c1", 0.5 * bound_c1,
                       "half of gamma^(1/q)(1-gamma)^(1/q)/(C_D^(1/q)*4K*eta_P)", "Harnack lemma")
    delta = ledger.record("delta_exp", q * pd.log_M / math.log(1.0 / gamma),
                          "q*ln M/ln(1/gamma)", "Harnack proposition")
    base = 2.0 * (2.0 * K) ** (1.0 - alpha_h) * beta_h
    log_bs = math.log(2.0 * base) - _log_one_minus_pow(pd.log_M, alpha_h / delta)
    beta_star = ledger.record("beta_star", _exp(log_bs),
                              "twice 2(2K)^(1-alpha)*beta/(1-(1+1/M)^(-alpha/delta))",
                              "Harnack proposition")
    if alpha_h >= 1.0:
        k0 = 1
    else:
        bound = q / math.log(gamma) * math.log(c1 * (2.0 ** (1.0 / (1.0 - alpha_h)) - 1.0))
        k0 = max(1, math.ceil(bound) + 1) if math.isfinite(bound) else 1
    ledger.record("k0", k0, "ceil(q/ln(gamma)*ln(c1*(2^(1/(1-alpha))-1)))+1",
                  "Harnack proposition")
    case1 = (k0 + 1) * pd.log_M
    case2 = pd.log_M + (delta / alpha_h) * log_bs - delta * math.log(c1)
    log_C = -math.log(pd.eps_P) + max(case1, case2)
    C = ledger.record("C_harnack", _exp(log_C), "(1/eps_P)*max{M^(k0+1), M*beta*^(delta/alpha)/c1^delta}",
                      "Harnack theorem")
    ledger.record("log_C_harnack", log_C, "ln C_harnack", "Harnack theorem")
    ledger.record("log10_C_harnack", log_C / math.log(10.0), "log10 C_harnack", "Harnack theorem")
    hc = HarnackConstants(eta_harnack=eta_h, c1=c1, delta_exp=delta, beta_star=beta_star,
                          k0=k0, C_harnack=C, log_C_harnack=log_C, log_beta_star=log_bs)
    return hc, ledger


def build_ledger(inp: DBCDInput, K: float, alpha_h: float, beta_h: float, C_D: float,
                 delta_rd: float, hypotheses: str = "A", c_nu: float | None = None) -> ConstantLedger:
    """Run the whole derivation chain into one ledger."""
    ledger = ConstantLedger()
    for name in ("gamma", "c", "eps", "eta", "nu"):
        ledger.record(f"input_{name}", getattr(inp, name), "input", "double ball / critical density")
    for name, v in (("K", K), ("alpha_h", alpha_h), ("beta_h", beta_h), ("C_D", C_D),
                    ("delta_rd", delta_rd)):
        ledger.record(f"input_{name}", v, "input", "quasi-metric space")
    pd, _ = derive_power_decay(inp, K, alpha_h, beta_h, C_D, delta_rd, hypotheses, c_nu, ledger)
    derive_harnack(pd, K, C_D, alpha_h, beta_h, ledger)
    return ledger
