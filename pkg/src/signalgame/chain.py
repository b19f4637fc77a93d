"""Exact analysis of the perturbed evolutionary chain at desk scale.

The joint state space (one language id per agent) is enumerated densely, the
one-step kernel is assembled in exact product form per agent, and the
machinery of stochastic stability runs on top: recurrent classes of the
unperturbed chain, one-step resistances (the epsilon-exponent of each
transition, additive over agents because agents update independently), least
resistances between classes via min-plus relaxation over the full state
space, stochastic potentials via minimum spanning arborescences, and
stationary distributions of the perturbed chain for epsilon sweeps.

Stationary solves default to a blocked Grassmann-Taksar-Heyman elimination:
subtraction-free, so componentwise accurate even when the spectral gap is
tiny, and arranged so the bulk of the work is one matrix product per block.
Power iteration is available for fast-mixing instances and cross-checks.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .arborescence import min_in_arborescence
from .dynamics import ImitationParams, LocalParams
from .errors import CapExceededError, ConvergenceError
from .languages import LanguageTable, get_table

DEFAULT_MAX_STATES = 100_000
TRACTABLE_PRESETS = ((2, 2, 2), (2, 2, 3))

_INF = float("inf")


class StateSpace:
    """Dense bijection between joint states and indices in [0, K^N)."""

    def __init__(self, table: LanguageTable, n_agents: int, max_states: int = DEFAULT_MAX_STATES):
        self.table = table
        self.n_agents = n_agents
        self.size = table.size**n_agents
        if self.size > max_states:
            presets = ", ".join(f"(m={m}, n={n}, N={N})" for m, n, N in TRACTABLE_PRESETS)
            raise CapExceededError(
                f"state space has {self.size} states, above the cap of {max_states}; "
                f"tractable presets: {presets}. Raise SIGNALGAME_MAX_STATES to override."
            )

    def encode(self, ids) -> int:
        index = 0
        for lid in ids:
            index = index * self.table.size + int(lid)
        return index

    def decode(self, index: int) -> tuple[int, ...]:
        ids = []
        for _ in range(self.n_agents):
            index, lid = divmod(index, self.table.size)
            ids.append(lid)
        return tuple(reversed(ids))

    def all_ids(self) -> np.ndarray:
        """(size, N) array of language ids, row v = decode(v)."""
        K, N = self.table.size, self.n_agents
        ids = np.empty((self.size, N), dtype=np.int64)
        index = np.arange(self.size)
        for i in range(N - 1, -1, -1):
            index, ids[:, i] = np.divmod(index, K)
        return ids


class _ChainModel:
    """Shared scaffolding for the two dynamics; subclasses supply the
    per-agent copy distribution and mutation support."""

    def __init__(self, table: LanguageTable, n_agents: int):
        self.table = table
        self.n_agents = n_agents

    # -- per-state structure ------------------------------------------------

    def _copy_dists(self, ids: np.ndarray, fit: np.ndarray) -> np.ndarray:
        """(N, K) epsilon-free copy distribution per agent."""
        raise NotImplementedError

    def _zero_cost_mask(self, ids: np.ndarray, fit: np.ndarray) -> np.ndarray:
        """(N, K) bool: languages an agent can adopt without a mutation."""
        raise NotImplementedError

    def _mutation_mask(self, ids: np.ndarray) -> np.ndarray:
        """(N, K) bool: languages reachable for an agent through one mutation."""
        raise NotImplementedError

    def per_agent_dists(self, ids: np.ndarray, eps: float) -> np.ndarray:
        raise NotImplementedError

    # -- public operations ---------------------------------------------------

    def transition_row(
        self, ids, eps: float, max_states: int = DEFAULT_MAX_STATES
    ) -> np.ndarray:
        """Exact one-step distribution over all state indices."""
        space = StateSpace(self.table, self.n_agents, max_states)
        dists = self.per_agent_dists(np.asarray(ids, dtype=np.int64), eps)
        row = dists[0]
        for i in range(1, self.n_agents):
            row = (row[:, None] * dists[i][None, :]).ravel()
        assert row.size == space.size
        return row

    def transition_prob(self, ids, new_ids, eps: float) -> float:
        """Probability of one specific transition; no state-space cap needed."""
        ids = np.asarray(ids, dtype=np.int64)
        new_ids = np.asarray(new_ids, dtype=np.int64)
        dists = self.per_agent_dists(ids, eps)
        return float(np.prod(dists[np.arange(self.n_agents), new_ids]))

    def step_resistance(self, ids, new_ids) -> float:
        """Epsilon-exponent of a one-step transition: mutations forced, or inf."""
        ids = np.asarray(ids, dtype=np.int64)
        new_ids = np.asarray(new_ids, dtype=np.int64)
        fit = self.table.fitness_scaled_ids(ids)
        zero = self._zero_cost_mask(ids, fit)
        mut = self._mutation_mask(ids)
        agents = np.arange(self.n_agents)
        cost = np.where(
            zero[agents, new_ids], 0.0, np.where(mut[agents, new_ids], 1.0, _INF)
        )
        return float(cost.sum())

    def kernel(self, eps: float, max_states: int = DEFAULT_MAX_STATES) -> np.ndarray:
        """Dense one-step transition matrix at a fixed epsilon."""
        space = StateSpace(self.table, self.n_agents, max_states)
        all_ids = space.all_ids()
        out = np.empty((space.size, space.size))
        for v in range(space.size):
            dists = self.per_agent_dists(all_ids[v], eps)
            row = dists[0]
            for i in range(1, self.n_agents):
                row = (row[:, None] * dists[i][None, :]).ravel()
            out[v] = row
        return out

    def resistance_matrix(self, max_states: int = DEFAULT_MAX_STATES) -> np.ndarray:
        """(V, V) float32 matrix of one-step resistances (inf = impossible)."""
        space = StateSpace(self.table, self.n_agents, max_states)
        all_ids = space.all_ids()
        out = np.empty((space.size, space.size), dtype=np.float32)
        for v in range(space.size):
            ids = all_ids[v]
            fit = self.table.fitness_scaled_ids(ids)
            zero = self._zero_cost_mask(ids, fit)
            mut = self._mutation_mask(ids)
            cost = np.where(zero, np.float32(0), np.where(mut, np.float32(1), np.float32(_INF)))
            row = cost[0]
            for i in range(1, self.n_agents):
                row = (row[:, None] + cost[i][None, :]).ravel()
            out[v] = row
        return out

    def recurrent_classes(self, max_states: int = DEFAULT_MAX_STATES) -> list[list[int]]:
        """Closed communication classes of the unperturbed (eps=0) chain."""
        space = StateSpace(self.table, self.n_agents, max_states)
        all_ids = space.all_ids()
        K = self.table.size
        srcs: list[int] = []
        dsts: list[int] = []
        for v in range(space.size):
            ids = all_ids[v]
            fit = self.table.fitness_scaled_ids(ids)
            zero = self._zero_cost_mask(ids, fit)
            supports = [np.flatnonzero(zero[i]) for i in range(self.n_agents)]
            for combo in itertools.product(*supports):
                w = 0
                for lid in combo:
                    w = w * K + int(lid)
                srcs.append(v)
                dsts.append(w)
        n_edges = len(srcs)
        graph = coo_matrix(
            (np.ones(n_edges, dtype=np.int8), (srcs, dsts)), shape=(space.size, space.size)
        ).tocsr()
        _, labels = connected_components(graph, directed=True, connection="strong")
        open_comps = set(labels[s] for s, t in zip(srcs, dsts) if labels[s] != labels[t])
        classes: dict[int, list[int]] = {}
        for v, lab in enumerate(labels):
            if lab not in open_comps:
                classes.setdefault(int(lab), []).append(v)
        return sorted(classes.values(), key=min)

    def least_resistance(
        self, max_states: int = DEFAULT_MAX_STATES
    ) -> "ResistanceGraph":
        """Least path resistance between every ordered pair of recurrent classes.

        Paths run through the full state space, so a single mutation followed
        by any amount of unperturbed flow is automatically a resistance-1
        path. Distances are found by min-plus relaxation to a fixed point.
        """
        classes = self.recurrent_classes(max_states)
        R = self.resistance_matrix(max_states)
        J = len(classes)
        r = np.zeros((J, J))
        for j, cls in enumerate(classes):
            dist = np.full(R.shape[0], np.float32(_INF))
            dist[cls] = 0.0
            for _ in range(R.shape[0] + 1):
                relaxed = np.minimum(dist, (R + dist[None, :]).min(axis=1))
                if np.array_equal(relaxed, dist):
                    break
                dist = relaxed
            else:
                raise RuntimeError("min-plus relaxation failed to reach a fixed point")
            for i, cls_i in enumerate(classes):
                r[i, j] = dist[cls_i].min()
        return ResistanceGraph(classes=classes, r=r, space=StateSpace(self.table, self.n_agents, max_states))


class ImitationChain(_ChainModel):
    """Exact chain of the global imitation-with-mutation dynamics."""

    def __init__(self, table: LanguageTable, params: ImitationParams):
        super().__init__(table, params.n_agents)
        self.params = params
        self._disk_unif = np.zeros((table.size, table.size))
        self._disk_mask = np.zeros((table.size, table.size), dtype=bool)
        for lid, members in enumerate(table.disks(params.d)):
            self._disk_unif[lid, members] = 1.0 / members.size
            self._disk_mask[lid, members] = True

    def _argmax_dist(self, ids: np.ndarray, fit: np.ndarray) -> np.ndarray:
        top = np.flatnonzero(fit == fit.max())
        dist = np.zeros(self.table.size)
        np.add.at(dist, ids[top], 1.0 / top.size)
        return dist

    def _copy_dists(self, ids: np.ndarray, fit: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self._argmax_dist(ids, fit), (self.n_agents, self.table.size))

    def _zero_cost_mask(self, ids: np.ndarray, fit: np.ndarray) -> np.ndarray:
        argmax_langs = np.zeros(self.table.size, dtype=bool)
        argmax_langs[ids[fit == fit.max()]] = True
        mask = np.broadcast_to(argmax_langs, (self.n_agents, self.table.size)).copy()
        mask[np.arange(self.n_agents), ids] = True
        return mask

    def _mutation_mask(self, ids: np.ndarray) -> np.ndarray:
        return self._disk_mask[ids]

    def per_agent_dists(self, ids: np.ndarray, eps: float) -> np.ndarray:
        fit = self.table.fitness_scaled_ids(ids)
        imit = self._argmax_dist(ids, fit)
        probs = np.asarray(self.params.revision_probs)
        out = probs[:, None] * (
            (1.0 - eps) * imit[None, :] + eps * self._disk_unif[ids]
        )
        out[np.arange(self.n_agents), ids] += 1.0 - probs
        return out


class LocalizedChain(_ChainModel):
    """Exact chain of the localized competition dynamics.

    Each agent always belongs to its own comparison set; other agents enter
    independently with probability p_ij. Mutations draw from the full
    language set.
    """

    def __init__(self, table: LanguageTable, params: LocalParams):
        super().__init__(table, params.n_agents)
        self.params = params
        self._probs = np.asarray(params.neighbor_probs)

    def _copy_dists(self, ids: np.ndarray, fit: np.ndarray) -> np.ndarray:
        N, K = self.n_agents, self.table.size
        out = np.zeros((N, K))
        for i in range(N):
            others = [j for j in range(N) if j != i]
            for included in itertools.product([False, True], repeat=N - 1):
                weight = 1.0
                members = [i]
                for j, inc in zip(others, included):
                    p = self._probs[i, j]
                    weight *= p if inc else 1.0 - p
                    if inc:
                        members.append(j)
                if weight == 0.0:
                    continue
                members = np.array(members)
                local = fit[members]
                best = members[local == local.max()]
                np.add.at(out[i], ids[best], weight / best.size)
        return out

    def _zero_cost_mask(self, ids: np.ndarray, fit: np.ndarray) -> np.ndarray:
        N, K = self.n_agents, self.table.size
        mask = np.zeros((N, K), dtype=bool)
        for i in range(N):
            forced = [j for j in range(N) if j != i and self._probs[i, j] >= 1.0]
            floor = max(fit[j] for j in forced + [i])
            mask[i, ids[fit >= floor]] = True
        return mask

    def _mutation_mask(self, ids: np.ndarray) -> np.ndarray:
        return np.ones((self.n_agents, self.table.size), dtype=bool)

    def per_agent_dists(self, ids: np.ndarray, eps: float) -> np.ndarray:
        copy = self._copy_dists(ids, self.table.fitness_scaled_ids(ids))
        return (1.0 - eps) * copy + eps / self.table.size


def make_chain(
    table: LanguageTable, params: ImitationParams | LocalParams
) -> _ChainModel:
    if isinstance(params, ImitationParams):
        return ImitationChain(table, params)
    return LocalizedChain(table, params)


# -- stationary distributions -------------------------------------------------


def _gth_stationary(kernel: np.ndarray, block: int = 160) -> np.ndarray:
    """Stationary vector by blocked GTH state elimination.

    Censoring state e folds the two-leg paths i -> e -> j into the remaining
    chain: the incoming column is scaled by the expected-visits factor 1/s
    (s = e's total exit probability toward lower states) and the outer
    product with e's raw outgoing row is added. States are eliminated from
    the highest index down; within a block, rows and the coupling columns
    are kept current with rank-1 updates while the large leading quadrant
    receives one deferred matrix product per block. Only additions,
    multiplications and divisions of nonnegative numbers occur, so entries
    keep componentwise relative accuracy regardless of the spectral gap.
    """
    A = np.array(kernel, dtype=np.float64)
    n = A.shape[0]
    hi = n
    while hi > 1:
        lo = max(1, hi - block)
        b = hi - lo
        U = np.empty((lo, b))
        V = np.empty((b, lo))
        for t in range(b - 1, -1, -1):
            e = lo + t
            s = A[e, :e].sum()
            if not s > 0.0:
                raise ConvergenceError(
                    "kernel is reducible (an eliminated state cannot reach lower states)"
                )
            A[:e, e] /= s
            if t > 0:
                A[lo:e, :e] += A[lo:e, e, None] * A[e, None, :e]
                A[:lo, lo:e] += A[:lo, e, None] * A[e, None, lo:e]
            U[:, t] = A[:lo, e]
            V[t] = A[e, :lo]
        A[:lo, :lo] += U @ V
        hi = lo
    mu = np.empty(n)
    mu[0] = 1.0
    for j in range(1, n):
        mu[j] = mu[:j] @ A[:j, j]
    return mu / mu.sum()


def _power_stationary(kernel: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    mu = np.full(kernel.shape[0], 1.0 / kernel.shape[0])
    for _ in range(max_iter):
        nxt = mu @ kernel
        if np.abs(nxt - mu).sum() <= tol:
            return nxt / nxt.sum()
        mu = nxt
    raise ConvergenceError(
        f"power iteration did not reach an L1 residual of {tol} within {max_iter} iterations"
    )


def stationary(
    kernel: np.ndarray,
    tol: float = 1e-12,
    method: str = "gth",
    max_iter: int = 10**6,
) -> np.ndarray:
    """Unique stationary distribution of an irreducible aperiodic kernel.

    ``method="gth"`` (default) is a direct elimination, exact to roundoff
    regardless of the spectral gap; ``method="power"`` iterates mu <- mu K
    until the L1 residual drops below tol and raises ConvergenceError at the
    iteration cap. Both results are residual-checked.
    """
    if method == "gth":
        mu = _gth_stationary(kernel)
    elif method == "power":
        mu = _power_stationary(kernel, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    residual = float(np.abs(mu @ kernel - mu).sum())
    if residual > max(tol, 1e-9):
        raise ConvergenceError(f"stationary residual {residual} above tolerance")
    return mu


# -- resistance graph and stochastic potential ---------------------------------


@dataclass
class ResistanceGraph:
    """Least resistances between the recurrent classes of the unperturbed chain."""

    classes: list[list[int]]
    r: np.ndarray
    space: StateSpace

    def __post_init__(self) -> None:
        finite = np.isfinite(self.r)
        if not np.array_equal(self.r[finite], np.round(self.r[finite])):
            raise ValueError("resistances must be integers")
        if np.any(np.diagonal(self.r) != 0):
            raise ValueError("self-resistance must be 0")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def class_language_ids(self) -> list[int] | None:
        """Language ids when every class is a single homogeneous state, else None."""
        ids = []
        for cls in self.classes:
            if len(cls) != 1:
                return None
            agent_ids = self.space.decode(cls[0])
            if len(set(agent_ids)) != 1:
                return None
            ids.append(agent_ids[0])
        return ids


@dataclass
class StochasticPotentialResult:
    gamma: np.ndarray
    trees: list[dict[int, int]]
    minimizers: list[int] = field(init=False)

    def __post_init__(self) -> None:
        lowest = self.gamma.min()
        self.minimizers = [int(i) for i in np.flatnonzero(self.gamma == lowest)]


def stochastic_potential(rg: ResistanceGraph) -> StochasticPotentialResult:
    """Per-class minimum arborescence weight and the set of minimizers."""
    weights = rg.r.astype(float).copy()
    np.fill_diagonal(weights, _INF)
    gammas = np.empty(rg.n_classes)
    trees: list[dict[int, int]] = []
    for root in range(rg.n_classes):
        total, successor = min_in_arborescence(weights, root)
        if not np.isfinite(total):
            raise ValueError(f"no finite-resistance arborescence into class {root}")
        gammas[root] = total
        trees.append(successor)
    return StochasticPotentialResult(gamma=gammas, trees=trees)


# -- stability verification -------------------------------------------------------


@dataclass
class VerifyReport:
    """Everything the stochastic-stability pipeline computed for one instance."""

    params: dict
    state_count: int
    classes: list[int]
    class_states: list[list[int]]
    classes_homogeneous: bool
    resistances: list[list[int]]
    gamma: dict[str, int]
    stable_set: list[int]
    optimal_set: list[int]
    epsilon_sweep: list[dict]
    verdict: str
    notes: list[str]

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> str:
        payload = {
            "params": self.params,
            "state_count": self.state_count,
            "classes": self.classes,
            "class_states": self.class_states,
            "classes_homogeneous": self.classes_homogeneous,
            "resistances": self.resistances,
            "gamma": self.gamma,
            "stable_set": self.stable_set,
            "optimal_set": self.optimal_set,
            "epsilon_sweep": self.epsilon_sweep,
            "verdict": self.verdict,
            "notes": self.notes,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def optimal_state_indices(space: StateSpace) -> np.ndarray:
    """Indices of the homogeneous states on aligned languages."""
    K, N = space.table.size, space.n_agents
    factor = sum(K**i for i in range(N))
    return np.asarray([int(lid) * factor for lid in space.table.aligned_ids])


def sweep_stationary(
    model: _ChainModel,
    epsilons,
    max_states: int = DEFAULT_MAX_STATES,
    tol: float = 1e-12,
) -> list[dict]:
    """Exact stationary solve per epsilon with mass bookkeeping on optimal states."""
    space = StateSpace(model.table, model.n_agents, max_states)
    optimal = optimal_state_indices(space)
    rows = []
    for eps in epsilons:
        if not 0.0 < eps < 1.0:
            raise ValueError(f"sweep epsilons must lie in (0, 1), got {eps}")
        kernel = model.kernel(eps, max_states)
        mu = stationary(kernel, tol=tol)
        del kernel
        top = int(mu.argmax())
        rows.append(
            {
                "eps": float(eps),
                "optimal_mass": float(mu[optimal].sum()),
                "optimal_masses": [float(mu[v]) for v in optimal],
                "top_state_id": top,
                "top_state_mass": float(mu[top]),
            }
        )
    return rows


def verify_stability(
    m: int,
    n: int,
    N: int,
    *,
    dynamic: str = "imitation",
    d: int = 2,
    revision_prob: float = 0.3,
    neighbor_prob: float = 0.5,
    epsilons=(),
    max_states: int = DEFAULT_MAX_STATES,
    tol: float = 1e-12,
) -> VerifyReport:
    """Run the full stochastic-stability pipeline on one instance.

    The verdict compares the arborescence minimizer set against the optimal
    states; the epsilon sweep, when requested, is numerical corroboration
    only. N=2 instances are reported as degenerate: the lone-mutant fitness
    gap vanishes there, so the one-mutation characterization has no bite.
    """
    table = get_table(m, n)
    epsilons = tuple(epsilons)
    base_eps = min(epsilons) if epsilons else 0.01
    if dynamic == "imitation":
        params: ImitationParams | LocalParams = ImitationParams.uniform(
            epsilon=base_eps, d=d, N=N, p=revision_prob
        )
    elif dynamic == "localized":
        params = LocalParams.uniform(epsilon=base_eps, N=N, p=neighbor_prob)
    else:
        raise ValueError(f"unknown dynamic {dynamic!r}")
    model = make_chain(table, params)
    space = StateSpace(table, N, max_states)

    rg = model.least_resistance(max_states)
    sp = stochastic_potential(rg)
    lang_ids = rg.class_language_ids()
    homogeneous = lang_ids is not None
    labels = lang_ids if homogeneous else [min(cls) for cls in rg.classes]

    stable = sorted(labels[i] for i in sp.minimizers)
    optimal = sorted(int(x) for x in table.aligned_ids) if homogeneous else []
    sweep = sweep_stationary(model, epsilons, max_states, tol) if epsilons else []

    notes = []
    if N == 2:
        notes.append(
            "N=2 is degenerate: a lone mutant always ties the residents, so every "
            "one-mutation transition succeeds and the minimizer set is not informative"
        )
    if m != n:
        notes.append(
            "m != n: the equality of stable and optimal sets is only fully established "
            "for m = n; treat this report as an empirical finding"
        )
    if N == 2:
        verdict = "degenerate"
    else:
        verdict = "pass" if homogeneous and set(stable) == set(optimal) else "fail"

    resistances = [
        [int(labels[i]), int(labels[j]), int(rg.r[i, j])]
        for i in range(rg.n_classes)
        for j in range(rg.n_classes)
        if i != j
    ]
    return VerifyReport(
        params={
            "m": m,
            "n": n,
            "N": N,
            "dynamic": dynamic,
            "d": d if dynamic == "imitation" else None,
            "revision_prob": revision_prob if dynamic == "imitation" else None,
            "neighbor_prob": neighbor_prob if dynamic == "localized" else None,
            "epsilons": [float(e) for e in epsilons],
        },
        state_count=space.size,
        classes=[int(x) for x in labels],
        class_states=[list(map(int, cls)) for cls in rg.classes],
        classes_homogeneous=homogeneous,
        resistances=resistances,
        gamma={str(labels[i]): int(sp.gamma[i]) for i in range(rg.n_classes)},
        stable_set=[int(x) for x in stable],
        optimal_set=[int(x) for x in optimal],
        epsilon_sweep=sweep,
        verdict=verdict,
        notes=notes,
    )
