# Copyright (c) 2026 The cavcool developers
#
# This file is part of cavcool.
#
# cavcool is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# cavcool is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with cavcool.  If not, see <https://www.gnu.org/licenses/>.

"""
The :mod:`cavcool.quantum` module contains the exact small-scale quantum
mechanics against which the moment equations are checked. There are three
parts:

* the collective spin algebra on the symmetric (Dicke) subspace, with a
  brute-force construction to verify it, and its Holstein-Primakoff boson
  realization;

* density matrix propagation under the Lindblad master equation with cavity
  decay, on a tensor product of atoms, phonon and photon modes;

* the bosonized model, whose normal-ordered covariance matrix obeys closed
  linear equations and serves as an oracle for the moment equations.

Operators are :mod:`scipy.sparse` CSR matrices; density matrices and
covariance matrices are dense :class:`numpy.ndarray` instances.

.. autoclass:: ProductBasis
    :members:

.. autoclass:: Ladder

.. autoclass:: HolsteinPrimakoff

.. autoclass:: BasisOperators

.. autoclass:: DensityRecord

.. autoclass:: CovarianceRecord

.. autofunction:: build_dicke_ladder

.. autofunction:: brute_force_symmetric

.. autofunction:: hp_operators

.. autofunction:: contraction_defect

.. autofunction:: basis_operators

.. autofunction:: build_hamiltonian_common

.. autofunction:: build_hamiltonian_individual

.. autofunction:: lindblad_rhs

.. autofunction:: propagate_rho

.. autofunction:: initial_density

.. autofunction:: extract_moments

.. autofunction:: bosonic_drift

.. autofunction:: propagate_covariance

.. autofunction:: closed_form_covariance

.. autofunction:: covariance_to_moments

.. autofunction:: moments_to_covariance

.. autofunction:: bosonic_rate
"""

import math
import gettext
from functools import lru_cache
from collections import namedtuple

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from .exc import (
    DimensionError,
    InvariantViolation,
    CutoffExceeded,
    ImaginaryResidue,
)
from .integrator import IntegratorConfig, integrate
from .moments import MomentState

_ = gettext.gettext


MAX_COMMON_PARTICLES = 8
MAX_INDIVIDUAL_PARTICLES = 3
MAX_BRUTE_FORCE_PARTICLES = 5
MAX_DIMENSION = 4096

TRACE_SLACK = 1e-10
HERMITICITY_SLACK = 1e-12
POSITIVITY_SLACK = 1e-8
PURITY_SLACK = 1e-8
CUTOFF_SLACK = 1e-8
RESIDUE_SLACK = 1e-10


class ProductBasis(namedtuple('ProductBasis', (
    'n_particles',
    'phonon_cutoff',
    'photon_cutoff',
    'layout',
))):
    """
    The tensor product space of an exact run. With the "common" layout the
    factors are the N+1 Dicke levels of the particles, one collective phonon
    mode with Fock states 0..\\ *phonon_cutoff*\\ −1 and the cavity mode with
    Fock states 0..\\ *photon_cutoff*\\ −1. With the "individual" layout every
    particle is a two-level factor with its own phonon mode, followed by the
    single cavity mode.

    Raises :exc:`~cavcool.exc.DimensionError` if the space exceeds the
    dimension budget.
    """
    __slots__ = ()
    layouts = ('common', 'individual')

    def __new__(cls, n_particles, phonon_cutoff, photon_cutoff,
                layout='common'):
        if layout not in cls.layouts:
            raise ValueError(_(
                'unknown layout {layout!r}; expected one of {layouts}'
            ).format(layout=layout, layouts=', '.join(cls.layouts)))
        for name, value in (
                ('n_particles', n_particles),
                ('phonon_cutoff', phonon_cutoff),
                ('photon_cutoff', photon_cutoff)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(_(
                    '{name}: must be an integer, not {value!r}').format(
                        name=name, value=value))
        if n_particles < 1:
            raise ValueError(_('n_particles: must be >= 1'))
        if phonon_cutoff < 2 or photon_cutoff < 2:
            raise ValueError(_('cutoffs must be >= 2'))
        limit = {
            'common': MAX_COMMON_PARTICLES,
            'individual': MAX_INDIVIDUAL_PARTICLES,
        }[layout]
        if n_particles > limit:
            raise DimensionError(_(
                'exact {layout} runs support at most {limit} particles, not '
                '{n}').format(layout=layout, limit=limit, n=n_particles))
        self = super().__new__(
            cls, n_particles, phonon_cutoff, photon_cutoff, layout)
        if self.dim > MAX_DIMENSION:
            raise DimensionError(_(
                'Hilbert space dimension {dim} exceeds the budget of '
                '{limit}').format(dim=self.dim, limit=MAX_DIMENSION))
        return self

    @property
    def dicke_dim(self):
        return self.n_particles + 1

    @property
    def dims(self):
        "The dimension of every tensor factor, in order."
        if self.layout == 'common':
            return (self.dicke_dim, self.phonon_cutoff, self.photon_cutoff)
        else:
            n = self.n_particles
            return (2,) * n + (self.phonon_cutoff,) * n + (self.photon_cutoff,)

    @property
    def dim(self):
        return math.prod(self.dims)

    @property
    def modes(self):
        """
        The labels of the bosonic factors as (label, factor index) pairs,
        used when reporting truncation problems.
        """
        if self.layout == 'common':
            return (('phonon', 1), ('photon', 2))
        else:
            n = self.n_particles
            return tuple(
                ('phonon {i}'.format(i=i), n + i) for i in range(n)
            ) + (('photon', 2 * n),)


class Ladder(namedtuple('Ladder', ('raising', 'lowering', 'z'))):
    "The collective spin operators σ⁺, σ⁻ and σ₃."
    __slots__ = ()


class HolsteinPrimakoff(namedtuple('HolsteinPrimakoff', (
    's_plus',
    'a_s',
    'sigma_plus',
))):
    """
    The bosonic raising operator S⁺, the nonlinear factor A_S and the
    reconstructed collective raising operator √N·S⁺·A_S.
    """
    __slots__ = ()


class BasisOperators(namedtuple('BasisOperators', (
    'sigma_plus',
    'sigma_z',
    'b',
    'c',
))):
    """
    Operators embedded in a :class:`ProductBasis`. For the common layout
    *sigma_plus*, *sigma_z* and *b* are single operators (the collective
    σ⁺, σ₃ and the phonon lowering operator); for the individual layout they
    are tuples holding one operator per particle. *c* is the cavity lowering
    operator.
    """
    __slots__ = ()


class DensityRecord(namedtuple('DensityRecord', (
    't',
    'rho',
    'trace_residual',
    'hermiticity',
    'min_eigenvalue',
    'purity',
))):
    "A recorded density matrix with its invariant diagnostics."
    __slots__ = ()


class CovarianceRecord(namedtuple('CovarianceRecord', ('t', 'M'))):
    """
    The normal-ordered covariance matrix M (M_ij = ⟨a_i† a_j⟩ for the modes
    a = (S, b, c)) at time *t*.
    """
    __slots__ = ()


def _lowering(dim):
    return sparse.diags(
        np.sqrt(np.arange(1, dim, dtype=float)), 1, shape=(dim, dim),
        format='csr', dtype=complex)


def _csr(matrix):
    return sparse.csr_matrix(matrix, dtype=complex)


def _dagger(op):
    return op.conj().T.tocsr()


def build_dicke_ladder(n_particles):
    """
    Returns the :class:`Ladder` of collective spin operators on the N+1
    symmetric states \\|l⟩ (l = 0..N excitations), with
    ⟨l+1\\|σ⁺\\|l⟩ = √(l+1)·√(N−l) and ⟨l\\|σ₃\\|l⟩ = l − N/2.
    """
    if isinstance(n_particles, bool) or not isinstance(n_particles, int):
        raise ValueError(_('N must be an integer, not {n!r}').format(
            n=n_particles))
    if n_particles < 1:
        raise ValueError(_('N must be >= 1'))
    if n_particles + 1 > MAX_DIMENSION:
        raise DimensionError(_(
            'Dicke space of {n} particles exceeds the budget of {limit}'
        ).format(n=n_particles, limit=MAX_DIMENSION))
    n = n_particles
    dim = n + 1
    levels = np.arange(n, dtype=float)
    raising = sparse.diags(
        np.sqrt(levels + 1) * np.sqrt(n - levels), -1, shape=(dim, dim),
        format='csr', dtype=complex)
    z = sparse.diags(
        np.arange(dim, dtype=float) - n / 2, 0, shape=(dim, dim),
        format='csr', dtype=complex)
    return Ladder(raising, _dagger(raising), z)


def _symmetric_states(n_particles):
    # columns are the normalized symmetric states |l>; bit i of the row
    # index marks particle i as excited
    count = 2 ** n_particles
    excitations = np.array([bin(i).count('1') for i in range(count)])
    states = np.zeros((count, n_particles + 1))
    for l in range(n_particles + 1):
        members = excitations == l
        states[members, l] = 1 / math.sqrt(members.sum())
    return states


def brute_force_symmetric(n_particles):
    """
    Builds Σᵢσᵢ⁺, Σᵢσᵢ⁻ and Σᵢσ₃ᵢ on the full 2^N dimensional space of N
    two-level particles, projects them onto the normalized symmetric states
    and returns the resulting (N+1)-dimensional :class:`Ladder`. Used to
    verify :func:`build_dicke_ladder`.
    """
    if not 1 <= n_particles <= MAX_BRUTE_FORCE_PARTICLES:
        raise DimensionError(_(
            'brute force construction supports 1 to {limit} particles, not '
            '{n}').format(limit=MAX_BRUTE_FORCE_PARTICLES, n=n_particles))
    single_plus = np.array([[0, 0], [1, 0]], dtype=float)
    single_z = np.diag([-0.5, 0.5])
    eye = np.eye(2)
    total_plus = np.zeros((2 ** n_particles,) * 2)
    total_z = np.zeros((2 ** n_particles,) * 2)
    # the most significant bit of the index belongs to the first factor
    for i in range(n_particles):
        plus_factor = z_factor = np.ones((1, 1))
        for j in range(n_particles):
            plus_factor = np.kron(plus_factor, single_plus if i == j else eye)
            z_factor = np.kron(z_factor, single_z if i == j else eye)
        total_plus += plus_factor
        total_z += z_factor
    states = _symmetric_states(n_particles)
    raising = states.T @ total_plus @ states
    z = states.T @ total_z @ states
    return Ladder(_csr(raising), _csr(raising.T), _csr(z))


def hp_operators(n_particles, dim):
    """
    Returns the :class:`HolsteinPrimakoff` operators truncated to *dim*
    levels: S⁺ with ⟨l+1\\|S⁺\\|l⟩ = √(l+1), the diagonal
    A_S = √(1 − S⁺S⁻/N) with entries √(1 − l/N), and √N·S⁺·A_S which
    reproduces the collective σ⁺ of :func:`build_dicke_ladder`.

    Raises :exc:`~cavcool.exc.DimensionError` if *dim* exceeds N+1 (the
    argument of the square root would turn negative).
    """
    if dim < 1:
        raise ValueError(_('dim must be >= 1'))
    if dim > n_particles + 1:
        raise DimensionError(_(
            'dim {dim} exceeds N+1 = {limit}; A_S is undefined above l = N'
        ).format(dim=dim, limit=n_particles + 1))
    s_plus = _lowering(dim).T.tocsr()
    a_s = sparse.diags(
        np.sqrt(1 - np.arange(dim, dtype=float) / n_particles), 0,
        shape=(dim, dim), format='csr', dtype=complex)
    sigma_plus = (math.sqrt(n_particles) * (s_plus @ a_s)).tocsr()
    return HolsteinPrimakoff(s_plus, a_s, sigma_plus)


def contraction_defect(n_particles, l_max):
    """
    Returns, for l = 0..\\ *l_max*, the norm of ([σ⁻/√N, σ⁺/√N] − 1)\\|l⟩,
    which measures how far the collective spin algebra is from the bosonic
    commutator on the first excited Dicke states. The value is 2l/N.

    The squared matrix elements ⟨l+1\\|σ⁺\\|l⟩² = (l+1)(N−l) are integers,
    so the commutator is evaluated in integer arithmetic and the result is
    exact.
    """
    n = n_particles
    if not 0 <= l_max <= n:
        raise ValueError(_(
            'l_max must lie within [0, N], not {l_max!r}').format(
                l_max=l_max))
    defects = []
    for l in range(l_max + 1):
        # <l|σ⁻σ⁺|l> - <l|σ⁺σ⁻|l> - N
        numerator = (l + 1) * (n - l) - l * (n - l + 1) - n
        defects.append(abs(numerator) / n)
    return defects


def _embed(factors, dims):
    # factors maps factor index to operator; the rest are identities
    result = None
    for index, dim in enumerate(dims):
        op = factors.get(index)
        if op is None:
            op = sparse.identity(dim, dtype=complex, format='csr')
        result = op if result is None else sparse.kron(
            result, op, format='csr')
    return result


@lru_cache(maxsize=16)
def basis_operators(basis):
    """
    Returns the :class:`BasisOperators` embedded in *basis*, a
    :class:`ProductBasis`.
    """
    dims = basis.dims
    c = _embed({len(dims) - 1: _lowering(basis.photon_cutoff)}, dims)
    if basis.layout == 'common':
        ladder = build_dicke_ladder(basis.n_particles)
        return BasisOperators(
            sigma_plus=_embed({0: ladder.raising}, dims),
            sigma_z=_embed({0: ladder.z}, dims),
            b=_embed({1: _lowering(basis.phonon_cutoff)}, dims),
            c=c)
    else:
        n = basis.n_particles
        plus = _csr([[0, 0], [1, 0]])
        z = _csr([[-0.5, 0], [0, 0.5]])
        lowering = _lowering(basis.phonon_cutoff)
        return BasisOperators(
            sigma_plus=tuple(_embed({i: plus}, dims) for i in range(n)),
            sigma_z=tuple(_embed({i: z}, dims) for i in range(n)),
            b=tuple(_embed({n + i: lowering}, dims) for i in range(n)),
            c=c)


def _hermitian_part(op):
    return (op + _dagger(op)).tocsr()


def build_hamiltonian_common(basis, c):
    """
    Returns the interaction Hamiltonian (ħ = 1)

        H = (x/√N)·σ⁺b + (y/√N)·σ⁺c + h.c.

    on *basis* (common layout) for the couplings *c*, using the exact
    collective σ⁺ of the Dicke ladder rather than its bosonized limit.
    """
    if basis.layout != 'common':
        raise ValueError(_('expected a common layout basis'))
    ops = basis_operators(basis)
    root_n = math.sqrt(basis.n_particles)
    term = ops.sigma_plus @ (c.x / root_n * ops.b + c.y / root_n * ops.c)
    return _hermitian_part(term)


def build_hamiltonian_individual(basis, c):
    """
    Returns the interaction Hamiltonian (ħ = 1)

        H = (1/√N)·Σᵢ (x·σᵢ⁺bᵢ + y·σᵢ⁺c) + h.c.

    on *basis* (individual layout) for the couplings *c*.
    """
    if basis.layout != 'individual':
        raise ValueError(_('expected an individual layout basis'))
    ops = basis_operators(basis)
    root_n = math.sqrt(basis.n_particles)
    term = sum(
        sigma_plus @ (c.x / root_n * b + c.y / root_n * ops.c)
        for sigma_plus, b in zip(ops.sigma_plus, ops.b))
    return _hermitian_part(term)


def _generator(H, c_op, kappa):
    if H.shape != c_op.shape or H.shape[0] != H.shape[1]:
        raise DimensionError(_(
            'H {h} and the collapse operator {c} must be square and of equal '
            'shape').format(h=H.shape, c=c_op.shape))
    c_op = sparse.csr_matrix(c_op, dtype=complex)
    c_dag = _dagger(c_op)
    h_eff = sparse.csr_matrix(H, dtype=complex) - 0.5j * kappa * (
        c_dag @ c_op)
    h_eff_dag = _dagger(h_eff)

    def rhs(rho):
        if rho.shape != H.shape:
            raise DimensionError(_(
                'density matrix {rho} does not conform to H {h}').format(
                    rho=rho.shape, h=H.shape))
        # rho @ A is evaluated as (A.T @ rho.T).T to stay with sparse @ dense
        drho = -1j * (h_eff @ rho - (h_eff_dag.T @ rho.T).T)
        if kappa:
            drho = drho + kappa * (c_op @ (c_dag.T @ rho.T).T)
        # exact Hermiticity of the increment
        return 0.5 * (drho + drho.conj().T)
    return rhs


def lindblad_rhs(rho, H, c_op, kappa):
    """
    Returns ρ̇ = −i[H, ρ] + κ(cρc† − ½c†cρ − ½ρc†c) for the density matrix
    *rho*, the Hamiltonian *H* and the collapse operator *c_op* (ħ = 1).
    Raises :exc:`~cavcool.exc.DimensionError` if the shapes do not conform.
    """
    return _generator(H, c_op, kappa)(np.asarray(rho, dtype=complex))


def _pack(matrix):
    return np.ascontiguousarray(matrix, dtype=complex).ravel().view(float)


def _unpack(vector, dim):
    return np.ascontiguousarray(vector, dtype=float).view(complex).reshape(
        dim, dim)


def _density_record(t, rho):
    hermitian = 0.5 * (rho + rho.conj().T)
    return DensityRecord(
        t=t,
        rho=rho,
        trace_residual=abs(np.trace(rho) - 1),
        hermiticity=float(np.max(np.abs(rho - rho.conj().T))),
        min_eigenvalue=float(np.linalg.eigvalsh(hermitian)[0]),
        purity=float(np.sum(np.abs(rho) ** 2)))


def _check_record(record, basis=None):
    if record.trace_residual > TRACE_SLACK:
        raise InvariantViolation(
            'trace', record.t, record.trace_residual, TRACE_SLACK)
    if record.hermiticity > HERMITICITY_SLACK:
        raise InvariantViolation(
            'hermiticity', record.t, record.hermiticity, HERMITICITY_SLACK)
    if record.min_eigenvalue < -POSITIVITY_SLACK:
        raise InvariantViolation(
            'positivity', record.t, record.min_eigenvalue, -POSITIVITY_SLACK)
    if record.purity > 1 + PURITY_SLACK:
        raise InvariantViolation(
            'purity', record.t, record.purity, 1 + PURITY_SLACK)
    if basis is not None:
        populations = np.real(np.diag(record.rho)).reshape(basis.dims)
        for mode, axis in basis.modes:
            others = tuple(i for i in range(len(basis.dims)) if i != axis)
            top = float(populations.sum(axis=others)[-1])
            if top >= CUTOFF_SLACK:
                raise CutoffExceeded(mode, top, record.t)


def propagate_rho(rho0, H, c_op, kappa, t_span, config=None, basis=None):
    """
    Integrate the master equation of :func:`lindblad_rhs` from *rho0* over
    *t_span* and return a list of :class:`DensityRecord`, one per recorded
    time of the integrator.

    Every record is checked for trace (to 1e-10), Hermiticity (1e-12),
    positivity (smallest eigenvalue above −1e-8) and purity (at most
    1 + 1e-8); the first violation raises
    :exc:`~cavcool.exc.InvariantViolation`. When *basis* is given, the
    population of the top Fock level of every bosonic mode must stay below
    1e-8 or :exc:`~cavcool.exc.CutoffExceeded` is raised.

    The default *config* is tighter than the integrator's (relative
    tolerance 1e-10, absolute 1e-13); derivatives are never recorded.
    """
    rho0 = np.array(rho0, dtype=complex)
    dim = H.shape[0]
    if rho0.shape != (dim, dim):
        raise DimensionError(_(
            'density matrix {rho} does not conform to H {h}').format(
                rho=rho0.shape, h=H.shape))
    t0 = float(t_span[0])
    _check_record(_density_record(t0, rho0), basis)
    if config is None:
        config = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13)
    config = config._replace(record_derivatives=False)
    generator = _generator(H, c_op, kappa)

    def rhs(t, y):
        return _pack(generator(_unpack(y, dim)))

    traj = integrate(rhs, _pack(rho0), t_span, config)
    records = []
    for t, y in zip(traj.times, traj.states):
        record = _density_record(float(t), _unpack(y, dim))
        _check_record(record, basis)
        records.append(record)
    return records


def _fock(dim, level):
    if isinstance(level, float) and not level.is_integer():
        raise ValueError(_(
            'a Fock state needs an integer occupation, not {level!r}').format(
                level=level))
    level = int(level)
    if not 0 <= level < dim:
        raise ValueError(_(
            'occupation {level} does not fit below the cutoff {dim}; raise '
            'cutoff').format(level=level, dim=dim))
    populations = np.zeros(dim)
    populations[level] = 1.0
    return populations


def _thermal(dim, mean):
    if mean < 0:
        raise ValueError(_('mean occupation must be >= 0'))
    if mean == 0:
        return _fock(dim, 0)
    populations = (mean / (mean + 1)) ** np.arange(dim)
    return populations / populations.sum()


def initial_density(basis, m0, n0=0, phonon_state='fock'):
    """
    Returns the initial density matrix on *basis*: all particles in their
    ground state, the phonons in the Fock state \\|m0⟩ or (with
    *phonon_state* "thermal") a thermal state of mean occupation *m0*
    truncated to the cutoff and renormalized, and the cavity in the Fock
    state \\|n0⟩. With the individual layout every phonon mode carries
    m0/N.
    """
    if phonon_state not in ('fock', 'thermal'):
        raise ValueError(_(
            'unknown phonon state {state!r}; expected fock or thermal'
        ).format(state=phonon_state))
    if m0 < 0:
        raise ValueError(_('m0 must be >= 0'))
    phonon = {'fock': _fock, 'thermal': _thermal}[phonon_state]
    if basis.layout == 'common':
        factors = [
            _fock(basis.dicke_dim, 0),
            phonon(basis.phonon_cutoff, m0),
        ]
    else:
        n = basis.n_particles
        per_mode = m0 / n
        factors = (
            [_fock(2, 0)] * n + [phonon(basis.phonon_cutoff, per_mode)] * n)
    factors.append(_fock(basis.photon_cutoff, n0))
    populations = factors[0]
    for factor in factors[1:]:
        populations = np.kron(populations, factor)
    return np.diag(populations).astype(complex)


def _expectation(op, rho):
    coo = op.tocoo()
    return complex(np.sum(coo.data * rho[coo.col, coo.row]))


@lru_cache(maxsize=16)
def _moment_operators(basis):
    ops = basis_operators(basis)
    root_n = math.sqrt(basis.n_particles)
    if basis.layout == 'common':
        pairs = [(ops.sigma_plus, ops.sigma_z, ops.b)]
    else:
        pairs = list(zip(ops.sigma_plus, ops.sigma_z, ops.b))
    c, c_dag = ops.c, _dagger(ops.c)
    m = sum(_dagger(b) @ b for plus, z, b in pairs)
    s3 = sum(z for plus, z, b in pairs)
    # i<S⁺a - S⁻a†> with S⁺ = σ⁺/√N (summed over particles when
    # individual)
    u1 = sum(
        1j * (plus @ b - _dagger(plus @ b)) for plus, z, b in pairs) / root_n
    u2 = sum(
        1j * (plus @ c - _dagger(plus @ c)) for plus, z, b in pairs) / root_n
    k3 = sum(b @ c_dag + _dagger(b) @ c for plus, z, b in pairs)
    return tuple(
        sparse.csr_matrix(op) for op in (m, c_dag @ c, s3, u1, u2, k3))


def extract_moments(rho, basis, t=0.0, return_residue=False):
    """
    Returns the :class:`~cavcool.moments.MomentState` of the density matrix
    *rho* on *basis*: m = ⟨b†b⟩, n = ⟨c†c⟩, s3 = ⟨σ₃⟩,
    u1 = i⟨S⁺b − S⁻b†⟩ and u2 = i⟨S⁺c − S⁻c†⟩ with S⁺ = σ⁺/√N, and
    k3 = ⟨bc† + b†c⟩. For the individual layout the summed quantities are
    returned.

    All six quantities are real for a Hermitian *rho*; the largest imaginary
    part is returned alongside the state when *return_residue* is set, and
    :exc:`~cavcool.exc.ImaginaryResidue` is raised if it exceeds 1e-10.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (basis.dim, basis.dim):
        raise DimensionError(_(
            'density matrix {rho} does not conform to the basis dimension '
            '{dim}').format(rho=rho.shape, dim=basis.dim))
    values = [_expectation(op, rho) for op in _moment_operators(basis)]
    residue = max(abs(v.imag) for v in values)
    if residue > RESIDUE_SLACK:
        raise ImaginaryResidue(residue, RESIDUE_SLACK)
    state = MomentState(t, *(v.real for v in values))
    if return_residue:
        return state, residue
    return state


def bosonic_drift(c, kappa):
    """
    Returns the drift matrix K = −iG − D of the Heisenberg equations
    ȧ = K·a for the bosonized modes a = (S, b, c), where G couples S to b
    with strength x and S to c with strength y, and D = diag(0, 0, κ/2).
    """
    G = np.array([
        [0.0, c.x, c.y],
        [c.x, 0.0, 0.0],
        [c.y, 0.0, 0.0],
    ])
    D = np.diag([0.0, 0.0, kappa / 2])
    return -1j * G - D


def _check_covariance(M):
    M = np.array(M, dtype=complex)
    if M.shape != (3, 3):
        raise DimensionError(_(
            'covariance matrix must be 3x3, not {shape}').format(
                shape=M.shape))
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.conj().T)) > HERMITICITY_SLACK * scale:
        raise ValueError(_('covariance matrix is not Hermitian'))
    return M


def propagate_covariance(M0, K, t_span, config=None):
    """
    Integrate Ṁ = K̄·M + M·Kᵀ for the normal-ordered covariance matrix from
    the Hermitian *M0* over *t_span*, and return a list of
    :class:`CovarianceRecord`. A vacuum bath adds no source term.

    Raises :exc:`ValueError` if *M0* is not Hermitian, and
    :exc:`~cavcool.exc.InvariantViolation` if a recorded population turns
    negative beyond 1e-10 of the initial scale.
    """
    M0 = _check_covariance(M0)
    K = np.asarray(K, dtype=complex)
    K_bar, K_t = K.conj(), K.T
    if config is None:
        config = IntegratorConfig()
    config = config._replace(record_derivatives=False)

    def rhs(t, y):
        M = _unpack(y, 3)
        return _pack(K_bar @ M + M @ K_t)

    traj = integrate(rhs, _pack(M0), t_span, config)
    limit = 1e-10 * max(1.0, float(np.max(np.abs(np.diag(M0)))))
    records = []
    for t, y in zip(traj.times, traj.states):
        M = _unpack(y, 3).copy()
        lowest = float(np.min(np.diag(M).real))
        if lowest < -limit:
            raise InvariantViolation('covariance positivity', t, lowest, -limit)
        records.append(CovarianceRecord(float(t), M))
    return records


def closed_form_covariance(M0, K, times):
    """
    Returns the exact solution M(t) = e^{K̄t}·M0·e^{Kᵀt} of the covariance
    equations at each of *times* as a list of :class:`CovarianceRecord`.
    """
    M0 = _check_covariance(M0)
    K = np.asarray(K, dtype=complex)
    records = []
    for t in times:
        E = expm(K * t)
        records.append(CovarianceRecord(float(t), E.conj() @ M0 @ E.T))
    return records


def covariance_to_moments(M, n_particles, t=0.0):
    """
    Maps the covariance matrix *M* to the moment variables: m = M_bb,
    n = M_cc, s3 = M_SS − N/2, u1 = −2·Im M_Sb, u2 = −2·Im M_Sc and
    k3 = 2·Re M_bc.
    """
    M = np.asarray(M, dtype=complex)
    return MomentState(
        t,
        M[1, 1].real,
        M[2, 2].real,
        M[0, 0].real - n_particles / 2,
        -2 * M[0, 1].imag,
        -2 * M[0, 2].imag,
        2 * M[1, 2].real)


def moments_to_covariance(state, n_particles):
    """
    Returns the covariance matrix whose :func:`covariance_to_moments` image
    is *state*. Components the moments do not determine (the real parts of
    the spin coherences and the imaginary part of the phonon-photon
    correlation) are zero.
    """
    M = np.zeros((3, 3), dtype=complex)
    M[0, 0] = state.s3 + n_particles / 2
    M[1, 1] = state.m
    M[2, 2] = state.n
    M[0, 1] = -0.5j * state.u1
    M[0, 2] = -0.5j * state.u2
    M[1, 2] = 0.5 * state.k3
    M[1, 0] = M[0, 1].conjugate()
    M[2, 0] = M[0, 2].conjugate()
    M[2, 1] = M[1, 2].conjugate()
    return M


def bosonic_rate(c, kappa):
    """
    Returns the asymptotic decay rate of the phonon population of the
    bosonized model, twice the slowest amplitude decay rate of
    :func:`bosonic_drift`.
    """
    eigenvalues = np.linalg.eigvals(bosonic_drift(c, kappa))
    return float(-2 * np.max(eigenvalues.real))
