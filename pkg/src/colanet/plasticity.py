"""Three-factor plasticity: anti-Hebbian depression plus reward compensation.

Each plastic link keeps, per synapse, an unbounded "resource" value whose
clamped projection is the effective weight. The rule is two-phase and
purely local:

* a postsynaptic spike claims, for each incoming synapse, the presynaptic
  spikes of its eligibility span, records a tag, and depresses the claimed
  synapses by ``d_h``;
* a reward spike arriving within the dopamine window settles the neuron's
  live tags at a net potentiation of ``d_d`` per tag (compensating the
  depression where it was applied) and consumes them.

A post spike that never gets rewarded therefore nets ``-d_h``; one that
does nets ``+d_d``. With ``d_d == d_h`` the two pathways are balanced.

The eligibility span of a post spike at t is the sliding window shortened
so spikes already claimed by the neuron's previous post spike are not
claimed twice: ``[max(t - window, previous post spike + 1), t]``. Each pre
spike feeds at most one depression per post neuron, and a spike volley of
recently-active neurons driven purely by non-plastic input (no pre
activity since the previous spike) changes no weights.

A spike arriving after more than one eligibility window of silence is a
backfill claim: it reaches the full window back, but when the learning
section competes through a winner-take-all stage, its depression is
committed only once the competition acknowledges the spike (the neuron's
aligned partner fires on the following step). Losing backfill claims
expire untouched, so a supervision volley that reawakens a dormant column
feeds the single winner without bleeding the rest of the column. A
rewarded tag nets ``+d_d`` whether or not its depression was committed.
Links without a competition stage commit all claims at spike time.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from colanet.errors import DataFormatError

# Resources may drift this many depression steps below the weight floor
# before being clamped; keeps recovery from saturation bounded.
RESOURCE_MARGIN_STEPS = 10

# sweep flags (temporary): contested plasticity semantics
DYNAMICS = {
    "claims": "span",        # "span": each pre spike claimed once; "window": sliding [t-W, t]
    "depression": "backfill_confirm",  # "immediate" | "backfill_confirm" | "all_confirm"
}

_NEVER = -(10**18)


@dataclass(frozen=True)
class PlasticityParams:
    d_h: float  # anti-Hebbian depression step per (confirmed) post spike
    d_d: float  # net dopamine potentiation per rewarded post spike
    dopamine_window: int  # ms a tag stays eligible for reward
    eligibility_window: int  # ms a pre spike stays claimable
    learning_until: float = float("inf")  # timestep at which all updates stop

    def __post_init__(self):
        if self.d_h < 0 or self.d_d < 0:
            raise ValueError("plasticity steps must be nonnegative")
        if self.dopamine_window < 0 or self.eligibility_window < 0:
            raise ValueError("plasticity windows must be nonnegative")


@dataclass
class PlasticityTag:
    """Record of one post spike: which synapses it claimed, and when."""

    post_neuron: int
    spike_time: int
    touched_synapses: np.ndarray  # pre indices claimed by this spike


class _BatchTag:
    """Internal tag shared by every neuron that fired in one timestep.

    Neurons firing together share the claimed pre set whenever their
    eligibility spans agree (the common case), so the tag store stays
    O(window), not O(window * neurons). ``pending`` marks posts whose
    depression awaits competition confirmation; ``committed`` marks posts
    already depressed.
    """

    __slots__ = ("time", "pending", "committed", "pre_idx")

    def __init__(self, time: int, pending: np.ndarray, committed: np.ndarray,
                 pre_idx: np.ndarray):
        self.time = time
        self.pending = pending  # bool (n_post,)
        self.committed = committed  # bool (n_post,)
        self.pre_idx = pre_idx  # int array of claimed pre nodes


class PlasticLinkState:
    """Vectorized synapse table of one plastic link (n_post x n_pre)."""

    def __init__(self, n_pre: int, n_post: int, params: PlasticityParams,
                 w_min: float, w_max: float, initial_resource: np.ndarray,
                 connectivity: Optional[np.ndarray] = None,
                 confirmed_depression: bool = False):
        if w_min > w_max:
            raise ValueError(f"w_min {w_min} exceeds w_max {w_max}")
        self.n_pre = n_pre
        self.n_post = n_post
        self.params = params
        self.w_min = w_min
        self.w_max = w_max
        self.resource = np.broadcast_to(initial_resource, (n_post, n_pre)).astype(np.float64).copy()
        self.resource_lo = w_min - RESOURCE_MARGIN_STEPS * params.d_h
        self.resource_hi = max(float(self.resource.max(initial=w_max)), w_max)
        self.connectivity = connectivity  # bool mask or None for full
        self.w_eff = self._project(self.resource)
        self.last_pre = np.full(n_pre, _NEVER, dtype=np.int64)
        self.last_post = np.full(n_post, _NEVER, dtype=np.int64)
        self.confirmed_depression = confirmed_depression
        self._tags: deque[_BatchTag] = deque()

    def _project(self, block: np.ndarray, conn_block: Optional[np.ndarray] = None) -> np.ndarray:
        w = np.clip(block, self.w_min, self.w_max)
        if self.connectivity is not None:
            w = w * (self.connectivity if conn_block is None else conn_block)
        return w

    def active(self, t: int) -> bool:
        return t < self.params.learning_until

    # -- spike-side hooks -------------------------------------------------

    def pre_spikes(self, pre_idx: np.ndarray, t: int) -> None:
        """Record pre activity at time t (feeds eligibility)."""
        self.last_pre[pre_idx] = t

    def input_for(self, pre_idx: np.ndarray) -> np.ndarray:
        """Summed effective weight each post neuron receives from pre_idx."""
        return self.w_eff[:, pre_idx].sum(axis=1)

    def eligible_pre(self, t: int, post: int) -> np.ndarray:
        """Pre nodes a post spike at t claims: window minus already-claimed."""
        horizon = max(t - self.params.eligibility_window, int(self.last_post[post]) + 1)
        return np.nonzero(self.last_pre >= horizon)[0]

    def post_spikes(self, post_idx: np.ndarray, t: int) -> Optional[PlasticityTag]:
        """Claim eligible synapses of every firing post neuron; tag them.

        Fresh claims (the neuron spiked within the last window) are
        depressed immediately. Backfill claims (first spike after a longer
        silence) wait for :meth:`confirm` when a competition stage exists.
        """
        if not self.active(t) or len(post_idx) == 0:
            return None
        last = self.last_post[post_idx]
        backfill = t - last > self.params.eligibility_window
        if DYNAMICS["claims"] == "span":
            horizons = np.maximum(t - self.params.eligibility_window, last + 1)
        else:
            horizons = np.full(len(post_idx), t - self.params.eligibility_window, dtype=np.int64)
        self.last_post[post_idx] = t
        first_tag: Optional[PlasticityTag] = None
        for horizon in np.unique(horizons):
            in_group = horizons == horizon
            posts = post_idx[in_group]
            claimed = np.nonzero(self.last_pre >= horizon)[0]
            if len(claimed) == 0:
                continue
            mask = np.zeros(self.n_post, dtype=bool)
            mask[posts] = True
            mode = DYNAMICS["depression"]
            deferred = self.confirmed_depression and (
                mode == "all_confirm" or (mode == "backfill_confirm" and bool(backfill[in_group][0]))
            )
            if deferred:
                tag = _BatchTag(t, mask, np.zeros(self.n_post, dtype=bool), claimed)
            else:
                self._apply(posts, claimed, -self.params.d_h)
                tag = _BatchTag(t, np.zeros(self.n_post, dtype=bool), mask, claimed)
            self._tags.append(tag)
            if first_tag is None:
                first_tag = PlasticityTag(int(posts[0]), t, claimed)
        return first_tag

    def confirm(self, post_idx: np.ndarray, spike_time: int, t: int) -> None:
        """Commit depression for tags of ``spike_time`` acknowledged by the
        competition stage (called when the aligned partner fires at t)."""
        if not self.active(t) or len(post_idx) == 0 or not self._tags:
            return
        confirm_mask = np.zeros(self.n_post, dtype=bool)
        confirm_mask[post_idx] = True
        for tag in reversed(self._tags):
            if tag.time < spike_time:
                break
            if tag.time != spike_time:
                continue
            touched = tag.pending & confirm_mask
            if touched.any():
                self._apply(np.nonzero(touched)[0], tag.pre_idx, -self.params.d_h)
                tag.pending &= ~touched
                tag.committed |= touched

    def reward(self, post_idx: np.ndarray, t: int) -> None:
        """Settle every live tag of post_idx at a net +d_d; consume them."""
        if not self.active(t) or len(post_idx) == 0 or not self._tags:
            return
        horizon = t - self.params.dopamine_window
        while self._tags and self._tags[0].time < horizon:
            self._tags.popleft()  # expired
        if not self._tags:
            return
        reward_mask = np.zeros(self.n_post, dtype=bool)
        reward_mask[post_idx] = True
        for tag in self._tags:
            refunded = tag.committed & reward_mask
            if refunded.any():
                self._apply(np.nonzero(refunded)[0], tag.pre_idx,
                            self.params.d_h + self.params.d_d)
                tag.committed &= ~reward_mask
            fresh = tag.pending & reward_mask
            if fresh.any():
                self._apply(np.nonzero(fresh)[0], tag.pre_idx, self.params.d_d)
                tag.pending &= ~reward_mask

    def _apply(self, rows: np.ndarray, cols: np.ndarray, delta: float) -> None:
        ix = np.ix_(rows, cols)
        block = self.resource[ix] + delta
        np.clip(block, self.resource_lo, self.resource_hi, out=block)
        self.resource[ix] = block
        conn = self.connectivity[ix] if self.connectivity is not None else None
        self.w_eff[ix] = self._project(block, conn)

    # -- single-synapse views (tests / inspection) ------------------------

    def on_post_spike(self, post_neuron: int, t: int) -> Optional[PlasticityTag]:
        return self.post_spikes(np.array([post_neuron]), t)

    def on_reward(self, post_neuron: int, t: int) -> None:
        self.reward(np.array([post_neuron]), t)

    def effective_weight(self, post: int, pre: int) -> float:
        return float(self.w_eff[post, pre])


def effective_weight(resource: float, w_min: float, w_max: float) -> float:
    """Clamped resource-to-weight mapping for a single synapse."""
    return float(min(max(resource, w_min), w_max))


# -- weight snapshot files -----------------------------------------------


def write_weight_snapshot(path, weights_by_section: dict[str, np.ndarray]) -> None:
    """CSV `section,post_index,pre_index,weight`; floats written losslessly."""
    with open(path, "w", encoding="ascii") as f:
        f.write("section,post_index,pre_index,weight\n")
        for section, w in weights_by_section.items():
            for post in range(w.shape[0]):
                row = w[post]
                for pre in range(w.shape[1]):
                    f.write(f"{section},{post},{pre},{row[pre]!r}\n")


def read_weight_snapshot(path) -> dict[str, np.ndarray]:
    """Inverse of :func:`write_weight_snapshot`."""
    per_section: dict[str, list[tuple[int, int, float]]] = {}
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "section,post_index,pre_index,weight":
            raise DataFormatError(f"{path}: unexpected snapshot header {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                section, post, pre, weight = line.split(",")
                per_section.setdefault(section, []).append(
                    (int(post), int(pre), float(weight))
                )
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: bad snapshot row {line!r}") from None
    out = {}
    for section, rows in per_section.items():
        n_post = max(r[0] for r in rows) + 1
        n_pre = max(r[1] for r in rows) + 1
        w = np.zeros((n_post, n_pre))
        for post, pre, weight in rows:
            w[post, pre] = weight
        out[section] = w
    return out
