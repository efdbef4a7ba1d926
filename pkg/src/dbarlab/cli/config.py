"""Run configuration: JSON parsing with full violation lists, forms and sample points."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from ..geometry import DomainSpec, radial_function, spec_violations
from ..homotopy import MixedForm, ZForm
from .expr import CoeffExpr, ExprError, parse_expr

OPERATORS = ("Hq", "H0", "Tq", "top", "boundary", "dcomplexT", "dcomplexTtilde")
LERAY = ("auto", "bm", "ball", "convex")
EXTENSIONS = ("stein",)
TOP_KEYS = {"domain", "operator", "form", "levels", "leray", "extension", "seed", "output",
            "points", "t_points", "box", "tolerance", "delta", "h_fd", "n_theta"}
DEFAULT_TOL = 1e-2


@dataclass
class Violation:
    path: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}, " if self.line else ""
        return f"{where}{self.path}: {self.message}"

    def to_dict(self):
        return {"path": self.path, "line": self.line, "message": self.message}


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("\n".join(str(v) for v in self.violations))


@dataclass
class Term:
    zbar: tuple          # 1-based indices
    coeff: CoeffExpr
    dt: tuple = ()


@dataclass
class RunConfig:
    domain: DomainSpec
    operator: str
    degree: int
    terms: list
    m: int = 0
    levels: tuple = (4,)
    leray: str = "auto"
    extension: str = "stein"
    seed: int = 0
    output: str = "out"
    points: object = field(default_factory=lambda: {"count": 6, "max_radius": 0.6})
    t_points: object = field(default_factory=lambda: {"count": 2})
    box: dict | None = None
    tolerance: float = DEFAULT_TOL
    delta: float | None = None
    h_fd: float = 1e-3
    n_theta: int = 4

    @property
    def mixed(self):
        return self.operator.startswith("dcomplex")

    def to_dict(self):
        form = {"degree": self.degree,
                "terms": [dict({"zbar": list(t.zbar), "coeff": str(t.coeff)},
                               **({"dt": list(t.dt)} if self.mixed else {}))
                          for t in self.terms]}
        if self.mixed:
            form["m"] = self.m
        d = {"domain": json.loads(self.domain.to_json()), "operator": self.operator,
             "form": form, "levels": list(self.levels), "leray": self.leray,
             "extension": self.extension, "seed": self.seed, "output": self.output,
             "points": self.points, "tolerance": self.tolerance, "h_fd": self.h_fd}
        if self.delta is not None:
            d["delta"] = self.delta
        if self.mixed:
            d.update(t_points=self.t_points, box=self.box, n_theta=self.n_theta)
        return d


def serialize(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# parsing

def _line_of(text, path):
    """Best-effort source line of a dotted/indexed field path."""
    pos = 0
    for part in re.findall(r"[A-Za-z_]+", path):
        m = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
        if not m:
            break
        pos = m.start()
    else:
        return text.count("\n", 0, pos) + 1
    return text.count("\n", 0, pos) + 1 if pos else None


def _index_list(v):
    return isinstance(v, list) and all(isinstance(i, int) and not isinstance(i, bool) for i in v)


def parse_config(text: str) -> RunConfig:
    """Validate ``text`` and return a RunConfig, or raise ConfigError with every violation."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([Violation("<json>", e.msg, e.lineno)]) from None
    errs = []

    def bad(path, msg):
        errs.append(Violation(path, msg, _line_of(text, path)))

    if not isinstance(raw, dict):
        raise ConfigError([Violation("<root>", "config must be a JSON object", 1)])
    for k in sorted(set(raw) - TOP_KEYS):
        bad(k, "unknown key")

    spec = None
    dom = raw.get("domain")
    if not isinstance(dom, dict):
        bad("domain", "missing or not an object")
    else:
        for k in sorted(set(dom) - {"kind", "n", "params", "L0"}):
            bad(f"domain.{k}", "unknown key")
        try:
            probe = DomainSpec.__new__(DomainSpec)
            object.__setattr__(probe, "kind", dom.get("kind"))
            object.__setattr__(probe, "n", int(dom.get("n", 0)))
            object.__setattr__(probe, "params", tuple(float(p) for p in dom.get("params", ())))
            object.__setattr__(probe, "L0", float(dom.get("L0", 1.0)))
            v = spec_violations(probe)
            for msg in v:
                bad("domain", msg)
            if not v:
                spec = DomainSpec.from_dict({k: dom[k] for k in dom if k in
                                             ("kind", "n", "params", "L0")})
        except (TypeError, ValueError) as e:
            bad("domain", str(e))

    op = raw.get("operator")
    if op not in OPERATORS:
        bad("operator", f"must be one of {list(OPERATORS)}, got {op!r}")
    mixed = isinstance(op, str) and op.startswith("dcomplex")
    n = spec.n if spec else None

    form = raw.get("form")
    degree, m, terms = None, 0, []
    if not isinstance(form, dict):
        bad("form", "missing or not an object")
    else:
        allowed = {"degree", "terms"} | ({"m"} if mixed else set())
        for k in sorted(set(form) - allowed):
            bad(f"form.{k}", "unknown key")
        degree = form.get("degree")
        if not isinstance(degree, int) or isinstance(degree, bool) or degree < 0:
            bad("form.degree", "degree must be a non-negative integer")
            degree = None
        if mixed:
            m = form.get("m")
            if not isinstance(m, int) or m < 1:
                bad("form.m", "mixed forms need m >= 1 real variables")
                m = 0
        if degree is not None and n is not None:
            top = n + m if mixed else n
            if degree > top:
                bad("form.degree", f"degree {degree} exceeds {top}"
                    + (" (n + m)" if mixed else " (n)"))
            elif op in ("H0", "boundary") and degree != 0:
                bad("form.degree", f"operator {op} takes functions (degree 0)")
            elif op in ("Hq", "Tq") and degree == 0:
                bad("form.degree", f"operator {op} needs degree >= 1 (use H0 for functions)")
            elif op == "top" and degree != n:
                bad("form.degree", f"operator top needs degree n = {n}")
            elif mixed and degree == 0:
                bad("form.degree", "D-complex solves need degree >= 1")
        tl = form.get("terms")
        if not isinstance(tl, list) or not tl:
            bad("form.terms", "need a non-empty list of terms")
            tl = []
        for i, t in enumerate(tl):
            p = f"form.terms[{i}]"
            if not isinstance(t, dict):
                bad(p, "term must be an object")
                continue
            for k in sorted(set(t) - ({"zbar", "coeff"} | ({"dt"} if mixed else set()))):
                bad(f"{p}.{k}", "unknown key")
            zb = t.get("zbar", [])
            dt = t.get("dt", [])
            if not _index_list(zb):
                bad(f"{p}.zbar", "must be a list of integers")
                zb = []
            if not _index_list(dt):
                bad(f"{p}.dt", "must be a list of integers")
                dt = []
            if n is not None and any(not 1 <= j <= n for j in zb):
                bad(f"{p}.zbar", f"indices must lie in 1..{n}")
            if mixed and any(not 1 <= j <= max(m, 0) for j in dt):
                bad(f"{p}.dt", f"indices must lie in 1..{m}")
            if len(set(zb)) != len(zb) or len(set(dt)) != len(dt):
                bad(p, "repeated index")
            if degree is not None and len(zb) + len(dt) != degree:
                bad(p, f"term has degree {len(zb) + len(dt)}, form degree is {degree}")
            src = t.get("coeff")
            if not isinstance(src, str):
                bad(f"{p}.coeff", "coefficient must be an expression string")
                continue
            try:
                ex = parse_expr(src)
            except ExprError as e:
                bad(f"{p}.coeff", str(e))
                continue
            if n is not None and ex.max_index("z") > n:
                bad(f"{p}.coeff", f"uses z{ex.max_index('z')} but n = {n}")
            if ex.max_index("t") > (m if mixed else 0):
                bad(f"{p}.coeff", "uses t variables" + (f" beyond m = {m}" if mixed
                                                         else " in a pure z-form"))
            terms.append(Term(tuple(zb), ex, tuple(dt)))

    levels = raw.get("levels", [4])
    if isinstance(levels, int) and not isinstance(levels, bool):
        levels = [levels]
    if not _index_list(levels) or not levels or any(not 1 <= L <= 6 for L in levels):
        bad("levels", "levels must be integers in 1..6")
        levels = [4]
    leray = raw.get("leray", "auto")
    if leray not in LERAY:
        bad("leray", f"must be one of {list(LERAY)} (levi maps are local only)")
    elif leray == "ball" and spec is not None and spec.kind != "unit-ball":
        bad("leray", "the ball map needs a unit-ball domain")
    ext = raw.get("extension", "stein")
    if ext not in EXTENSIONS:
        bad("extension", f"must be one of {list(EXTENSIONS)}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        bad("seed", "seed must be a non-negative integer")
    tol = raw.get("tolerance", DEFAULT_TOL)
    if not isinstance(tol, (int, float)) or tol <= 0:
        bad("tolerance", "must be a positive number")
    delta = raw.get("delta")
    if delta is not None and spec is not None and not 0 < delta <= spec.delta_max:
        bad("delta", f"must lie in (0, {spec.delta_max}]")
    h_fd = raw.get("h_fd", 1e-3)
    if not isinstance(h_fd, (int, float)) or not 0 < h_fd < 0.1:
        bad("h_fd", "must lie in (0, 0.1)")
    n_theta = raw.get("n_theta", 4)
    if not isinstance(n_theta, int) or n_theta < 4:
        bad("n_theta", "need at least 4 theta nodes")
    output = raw.get("output", "out")
    if not isinstance(output, str) or not output:
        bad("output", "must be a non-empty path string")

    points = raw.get("points", {"count": 6, "max_radius": 0.6})
    _check_points(points, "points", n, bad, complex_=True)
    t_points = raw.get("t_points", {"count": 2})
    box = raw.get("box")
    if mixed:
        _check_points(t_points, "t_points", m, bad, complex_=False)
        if box is not None:
            if not (isinstance(box, dict) and set(box) == {"lo", "hi"}
                    and len(box["lo"]) == m and len(box["hi"]) == m):
                bad("box", f"box needs lo and hi lists of length m = {m}")
            elif not all(lo < 0 < hi for lo, hi in zip(box["lo"], box["hi"])):
                bad("box", "box must contain 0 in its interior (star-shaped about 0)")
    else:
        for k in ("t_points", "box", "n_theta"):
            if k in raw:
                bad(k, "only meaningful for D-complex operators")

    if errs:
        raise ConfigError(errs)
    return RunConfig(spec, op, degree, terms, m, tuple(levels), leray, ext, seed, output,
                     points, t_points if mixed else {"count": 2}, box, float(tol), delta,
                     float(h_fd), n_theta)


def _check_points(points, path, dim, bad, complex_):
    if isinstance(points, dict):
        extra = set(points) - {"count", "max_radius"}
        if extra:
            bad(path, f"unknown keys {sorted(extra)}")
        c = points.get("count")
        if not isinstance(c, int) or c < 1:
            bad(f"{path}.count", "count must be a positive integer")
        r = points.get("max_radius", 0.6)
        if not isinstance(r, (int, float)) or not 0 < r < 1:
            bad(f"{path}.max_radius", "must lie in (0, 1)")
        return
    if not isinstance(points, list) or not points:
        bad(path, "must be {count, max_radius} or a non-empty list of points")
        return
    for i, p in enumerate(points):
        if dim is not None and (not isinstance(p, list) or len(p) != dim):
            bad(f"{path}[{i}]", f"point needs {dim} coordinates")
            continue
        for c in p:
            ok = (isinstance(c, list) and len(c) == 2) if complex_ else isinstance(c, (int, float))
            if not ok:
                bad(f"{path}[{i}]", "complex coordinates are [re, im] pairs" if complex_
                    else "real coordinates are numbers")
                break


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# building inputs

def sample_points(cfg: RunConfig, seed=None):
    """Evaluation points in D: explicit list or seeded draws at |z| <= max_radius * boundary."""
    spec = cfg.domain
    n = spec.n
    pts = cfg.points
    if isinstance(pts, list):
        return np.array([[complex(re_, im_) for re_, im_ in p] for p in pts])
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    c = pts["count"]
    th = rng.normal(size=(c, n)) + 1j * rng.normal(size=(c, n))
    th /= np.linalg.norm(th, axis=-1, keepdims=True)
    r = pts.get("max_radius", 0.6) * rng.uniform(0, 1, c) ** (1 / (2 * n))
    return (radial_function(spec, th) * r)[:, None] * th


def sample_t(cfg: RunConfig, seed=None):
    m = cfg.m
    lo, hi = _box(cfg)
    pts = cfg.t_points
    if isinstance(pts, list):
        return np.array(pts, dtype=float)
    rng = np.random.default_rng((cfg.seed if seed is None else seed) + 1)
    r = pts.get("max_radius", 0.6)
    return lo * r + (hi - lo) * r * rng.uniform(size=(pts["count"], m))


def _box(cfg):
    if cfg.box:
        return np.array(cfg.box["lo"], float), np.array(cfg.box["hi"], float)
    return -np.ones(cfg.m), np.ones(cfg.m)


def build_zform(cfg: RunConfig) -> ZForm:
    """ZForm with analytic zbar-partials from the symbolic derivatives."""
    n = cfg.domain.n
    coeffs, partials = {}, {}
    for t in cfg.terms:
        I = tuple(j - 1 for j in t.zbar)
        f = t.coeff
        coeffs.setdefault(I, []).append(f)
        for k in range(n):
            partials.setdefault((I, k), []).append(f.dzbar(k))

    def summed(fs):
        return fs[0] if len(fs) == 1 else (lambda Z, fs=fs: sum(g(Z) for g in fs))

    return ZForm(n, cfg.degree, {I: summed(v) for I, v in coeffs.items()},
                 partials={key: summed(v) for key, v in partials.items()}, h_fd=cfg.h_fd)


def build_mixed(cfg: RunConfig) -> MixedForm:
    coeffs = {}
    for t in cfg.terms:
        key = (tuple(j - 1 for j in t.zbar), tuple(j - 1 for j in t.dt))
        f = t.coeff
        prev = coeffs.get(key)
        g = (lambda z, tt, f=f: f(z, tt))
        coeffs[key] = g if prev is None else (lambda z, tt, a=prev, b=g: a(z, tt) + b(z, tt))
    return MixedForm(cfg.domain.n, cfg.m, cfg.degree, coeffs, h_fd=cfg.h_fd)
