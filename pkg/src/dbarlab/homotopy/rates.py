"""Blow-up rates of second derivatives near a boundary point of the ball.

Targets approach p = e_1 along the inner normal, z = (1 - d) p.  The
correction terms of the homotopy operators are integrals over the shell
against [dbar, E] phi; their second derivatives are computed by pushing
a degree-2 Taylor series in z through the kernel code.
"""
import numpy as np

from ..autodiff import Taylor
from ..cfkernels import component, omega, omega01
from ..geometry import DomainSpec
from ..ext.stein import SteinExtension
from ..leray import ball_map, bm_map
from ..normlab import boundary_exponent_fit
from ..quad import fsum_complex, point_graded_shell_mesh
from .solver import _as_density, pair
from .zform import ZForm, insert_index

DEFAULT_D = tuple(2.0 ** -k for k in range(3, 10))
CHUNK = 200_000


def _directions(n):
    """Real unit directions e_j and i e_j."""
    out = []
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        out += [e, 1j * e]
    return out


def shell_commutator(phi: ZForm, ext: SteinExtension, Z):
    """[dbar, E] phi at shell nodes, using ZForm.dbar for the E(dbar phi) part."""
    n = phi.n
    comm = {}
    for I, f in phi.coeffs.items():
        dE = ext.dbar_extended(f, Z)
        for k in range(n):
            J, s = insert_index(k, I)
            if s:
                comm[J] = comm.get(J, 0.0) + s * dE[:, k]
    dphi = phi.dbar()
    if dphi is not None and not phi.closed:
        for J, g in dphi.coeffs.items():
            comm[J] = comm.get(J, 0.0) - ext.extend(g, Z)
    return comm


def _second_derivative(kind, z0, v, nodes, weights, density, q_out):
    n = len(z0)
    one = np.ones(len(nodes))
    zt = [Taylor.line(z0[j] * one, v[j] * one, 2) for j in range(n)]
    zbt = [Taylor.line(np.conj(z0[j]) * one, np.conj(v[j]) * one, 2) for j in range(n)]
    ze = [nodes[:, j] for j in range(n)]
    zeb = [np.conj(c) for c in ze]
    if kind == "cf1":
        K = component(omega(ball_map(n), zt, zbt, ze, zeb), 0)
    else:
        K = component(omega01(bm_map(n), ball_map(n), zt, zbt, ze, zeb), q_out)
    out = {}
    for I, c in pair(K, _as_density(n, density), n).items():
        c2 = c.derivative(2) if isinstance(c, Taylor) else np.zeros(len(weights))
        out[I] = fsum_complex(np.broadcast_to(c2, weights.shape) * weights)
    return out


class BoundaryRate:
    """sup over real unit directions of |d^2 u(z)| at z = (1 - d) e_1.

    ``term`` is "H0" (the Omega^1 correction of H_0 f, q = 0) or
    "commutator" (the Omega^{01} shell term of H_q phi, q >= 1, n = 2).
    """

    def __init__(self, term="H0", n=2, delta=0.2, d_values=DEFAULT_D, panel_nodes=4,
                 n_arg=12, h_fd=1e-5):
        self.term = term
        self.n = n
        self.delta = delta
        self.d_values = d_values
        self.panel_nodes = panel_nodes
        self.n_arg = n_arg
        self.h_fd = h_fd

    def fit(self, phi: ZForm):
        n = self.n
        if phi.n != n:
            raise ValueError("form dimension does not match n")
        if self.term == "H0" and phi.q != 0:
            raise ValueError("H0 term takes a function (q = 0)")
        if self.term == "commutator" and (n < 2 or phi.q < 1 or phi.q - 1 > n - 2):
            raise ValueError("commutator term needs n >= 2 and 1 <= q <= n - 1")
        spec = DomainSpec("unit-ball", n)
        ext = SteinExtension(spec, delta=self.delta, h_fd=self.h_fd)
        d_min = min(self.d_values)
        self.mesh_ = point_graded_shell_mesh(n, self.delta, d_min, self.panel_nodes, self.n_arg)
        nodes = self.mesh_.nodes
        comm = {}
        for a in range(0, len(nodes), CHUNK):
            part = shell_commutator(phi, ext, nodes[a:a + CHUNK])
            for J, v in part.items():
                comm.setdefault(J, []).append(np.broadcast_to(v, (len(nodes[a:a + CHUNK]),)))
        self.density_ = {J: np.concatenate(v) for J, v in comm.items()}
        self.q_out_ = phi.q - 1
        return self

    def values(self, d):
        n = self.n
        p = np.zeros(n, dtype=complex)
        p[0] = 1.0
        z0 = (1 - d) * p
        kind = "cf1" if self.term == "H0" else "cf01"
        nodes, w = self.mesh_.nodes, self.mesh_.weights
        best = 0.0
        for v in _directions(n):
            acc = {}
            for a in range(0, len(nodes), CHUNK):
                dens = {J: x[a:a + CHUNK] for J, x in self.density_.items()}
                r = _second_derivative(kind, z0, v, nodes[a:a + CHUNK], w[a:a + CHUNK], dens,
                                       self.q_out_)
                for I, x in r.items():
                    acc[I] = acc.get(I, 0.0) + x
            if acc:
                best = max(best, max(abs(x) for x in acc.values()))
        return best

    def run(self):
        self.samples_ = np.array([self.values(d) for d in self.d_values])
        self.fit_ = boundary_exponent_fit(self.d_values, self.samples_, k=2)
        return self.fit_


def cusp_form(n=2, alpha=1.25, q=1, center=None):
    """|z - p|^alpha dzbar_1 ^ ... ^ dzbar_q with analytic zbar-partials."""
    p = np.zeros(n, dtype=complex) if center is None else np.asarray(center, dtype=complex)
    if center is None:
        p[0] = 1.0

    def f(Z):
        return np.linalg.norm(Z - p, axis=-1) ** alpha + 0j

    def df(k):
        def g(Z):
            r2 = np.sum(np.abs(Z - p) ** 2, axis=-1)
            return 0.5 * alpha * r2 ** (alpha / 2 - 1) * (Z[..., k] - p[k])
        return g

    I = tuple(range(q))
    return ZForm(n, q, {I: f}, partials={(I, k): df(k) for k in range(n)})


def blowup_rates(d_values=DEFAULT_D, delta=0.2, cusp=1.25, c1_exponent=1.1):
    """Both boundary-rate checks on the ball in C^2.

    Returns a list of dicts with the fitted slope, the bound it must
    respect and a pass flag.  For the cusp the bound is the derivative
    loss of C^{r + 1/2}: slope >= (r + 1/2) - 2 - 0.1.
    """
    rows = []
    br = BoundaryRate("H0", 2, delta, d_values).fit(cusp_form(2, c1_exponent, q=0))
    fit = br.run()
    rows.append(dict(term="H0", exponent=c1_exponent, slope=fit.slope_, bound=-1.1,
                     samples=br.samples_.tolist(), ok=bool(fit.slope_ >= -1.1)))
    br = BoundaryRate("commutator", 2, delta, d_values).fit(cusp_form(2, cusp, q=1))
    fit = br.run()
    bound = cusp + 0.5 - 2 - 0.1
    rows.append(dict(term="H1-commutator", exponent=cusp, slope=fit.slope_, bound=bound,
                     samples=br.samples_.tolist(), ok=bool(fit.slope_ >= bound)))
    return rows
