"""Discrete-time (1 ms) spiking network engine.

Neurons are leaky integrate-and-fire with a threshold-normalized membrane
potential: each step the potential decays by ``exp(-1/chartime)``, synaptic
input adds its weight, and a neuron whose potential reaches 1 fires and
resets to 0. The potential is rectified at 0 after input integration:
inhibitory input cancels excitation arriving in the same step but does not
accumulate as a sub-zero charge across steps. Four synapse kinds exist:

* ``static``  - adds its weight to the target potential;
* ``plastic`` - like static, but the weight is a learned, clamped resource
  (see :mod:`colanet.plasticity`);
* ``gating``  - never touches the potential; it opens or vetoes firing for
  the delivery timestep only;
* ``reward``  - triggers the dopamine phase of plasticity on the target.

Gating semantics: a section targeted by any positive-weight gating link is
default-closed and may fire only in timesteps where at least one positive
gating input arrived (and the summed gate is nonnegative). A section
targeted only by negative gating links is default-open and is merely
vetoed while its gate sum is negative.

A section that inhibits itself through a negative all-to-all gating link is
a winner-take-all group: simultaneous candidates are resolved atomically to
a single winner (highest potential, seeded-random tie break) because a 1 ms
grid cannot order same-step spikes. Losing candidates are reset to 0.

Spike timing: spikes fired by neurons at step t reach their targets at
``t + max(delay, 1)`` (state computed mid-step cannot causally act within
the same step). External receptor spikes are known before the step and are
delivered at ``t + delay`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from colanet.errors import ConfigError, SimulationError
from colanet.plasticity import PlasticityParams, PlasticLinkState

THRESHOLD = 1.0

# sweep flags (temporary): contested dynamics semantics
DYNAMICS = {
    "floor": True,          # rectify potentials at 0 after integration
    "soft_reset": False,    # subtract threshold instead of zeroing on fire
    "wta_loser_reset": False,  # reset losing candidates to 0
}

LINK_KINDS = ("static", "plastic", "gating", "reward")
POLICIES = ("full", "aligned", "all_to_all_sections", "exclusive")


def _canon_policy(policy: str) -> str:
    return policy.replace("-", "_")


def resolve_policy(policy: str, from_size: int, to_size: int, class_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Expand a link policy into parallel (pre, post) index arrays.

    ``aligned`` pairs indices through their class (index mod class_dim):
    equal sizes give the identity, a class-structured section maps onto the
    class axis, and a class axis fans out to every same-class neuron.
    ``exclusive`` connects a class axis to every *other* class.
    """
    policy = _canon_policy(policy)
    if policy not in POLICIES:
        raise ConfigError(f"unknown link policy {policy!r}")

    if policy == "full":
        pre = np.repeat(np.arange(from_size), to_size)
        post = np.tile(np.arange(to_size), from_size)
        return pre, post

    if policy == "aligned":
        if from_size == to_size:
            idx = np.arange(from_size)
            return idx, idx.copy()
        if to_size == class_dim and from_size % class_dim == 0:
            pre = np.arange(from_size)
            return pre, pre % class_dim
        if from_size == class_dim and to_size % class_dim == 0:
            post = np.arange(to_size)
            return post % class_dim, post
        raise ConfigError(
            f"aligned policy incompatible with sizes {from_size}->{to_size} (class_dim {class_dim})"
        )

    if policy == "all_to_all_sections":
        pre = np.repeat(np.arange(from_size), to_size)
        post = np.tile(np.arange(to_size), from_size)
        if from_size == to_size:  # self-link: drop self-connections
            keep = pre != post
            pre, post = pre[keep], post[keep]
        return pre, post

    # exclusive: class c reaches every target of a different class
    if from_size != class_dim or to_size % class_dim != 0:
        raise ConfigError(
            f"exclusive policy needs class_dim->k*class_dim sizes, got {from_size}->{to_size}"
        )
    pre = np.repeat(np.arange(from_size), to_size)
    post = np.tile(np.arange(to_size), from_size)
    keep = post % class_dim != pre
    return pre[keep], post[keep]


def wta_resolve(candidates: np.ndarray, potentials: np.ndarray, rng: np.random.Generator) -> int:
    """Single winner among same-step candidates: max potential, random ties."""
    if len(candidates) == 0:
        raise SimulationError("wta_resolve called with no candidates")
    values = potentials[candidates]
    top = candidates[values == values.max()]
    if len(top) == 1:
        return int(top[0])
    return int(top[rng.integers(len(top))])


@dataclass(frozen=True)
class SectionSpec:
    name: str
    n: int
    chartime: float
    plasticity: Optional[PlasticityParams] = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"section {self.name}: n must be >= 1")
        if self.chartime < 1:
            raise ConfigError(f"section {self.name}: chartime must be >= 1 ms")


@dataclass(frozen=True)
class LinkSpec:
    from_name: str
    to_name: str
    kind: str = "static"
    policy: str = "full"
    weight: float = 0.0
    delay: int = 0
    probability: float = 1.0
    ini_resource: tuple[float, float] = (0.0, 0.0)  # plastic only
    w_min: float = 0.0  # plastic only
    w_max: float = 0.0  # plastic only
    max_pre: Optional[int] = None  # plastic only

    def __post_init__(self):
        if self.kind not in LINK_KINDS:
            raise ConfigError(f"unknown link kind {self.kind!r}")
        if self.delay < 0:
            raise ConfigError("link delay must be nonnegative")
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigError("connection probability must be in [0, 1]")


class _Section:
    __slots__ = (
        "spec", "potential", "gate_level", "gate_opened", "decay",
        "gated", "default_closed", "wta", "plastic_in", "confirm_hooks",
        "race_source", "fire_value",
    )

    def __init__(self, spec: SectionSpec):
        self.spec = spec
        self.potential = np.zeros(spec.n)
        self.gate_level = np.zeros(spec.n)
        self.gate_opened = np.zeros(spec.n, dtype=bool)
        self.decay = float(np.exp(-1.0 / spec.chartime))
        self.gated = False
        self.default_closed = False
        self.wta = False
        self.plastic_in: list[PlasticLinkState] = []
        # plastic states of an upstream learning section whose spikes this
        # (winner-take-all) section acknowledges one step later
        self.confirm_hooks: list[PlasticLinkState] = []
        # the identity-aligned upstream section whose firing potentials
        # rank this section's race (None: rank by own potentials)
        self.race_source: "_Section | None" = None
        # pre-reset potential of each neuron's most recent spike
        self.fire_value = np.zeros(spec.n)


class _Link:
    __slots__ = (
        "spec", "pre", "post", "targets_of", "from_is_receptor", "plastic", "latency",
    )

    def __init__(self, spec: LinkSpec, pre: np.ndarray, post: np.ndarray,
                 from_is_receptor: bool, plastic: Optional[PlasticLinkState]):
        self.spec = spec
        self.pre = pre
        self.post = post
        self.from_is_receptor = from_is_receptor
        self.plastic = plastic
        self.latency = spec.delay if from_is_receptor else max(spec.delay, 1)
        if plastic is None:
            order = np.argsort(pre, kind="stable")
            pre_sorted, post_sorted = pre[order], post[order]
            from_size = (int(pre.max()) + 1) if len(pre) else 0
            bounds = np.searchsorted(pre_sorted, np.arange(from_size + 1))
            self.targets_of = [
                post_sorted[bounds[i]:bounds[i + 1]] for i in range(from_size)
            ]
        else:
            self.targets_of = None

    @property
    def n_synapses(self) -> int:
        if self.plastic is not None and self.plastic.connectivity is not None:
            return int(self.plastic.connectivity.sum())
        return len(self.pre)

    def posts_for(self, pre_idx: np.ndarray) -> np.ndarray:
        table = self.targets_of
        chunks = [table[p] for p in pre_idx if p < len(table)]
        if not chunks:
            return np.empty(0, dtype=np.int64)
        return chunks[0] if len(chunks) == 1 else np.concatenate(chunks)


class Network:
    """Compiled, runnable network: sections, synapse tables, clock, rng."""

    def __init__(self, sections: Iterable[SectionSpec], links: Iterable[LinkSpec],
                 receptors: dict[str, int], seed: int, class_dim: int = 10,
                 learning_until: float = float("inf"),
                 image_receptor: Optional[str] = None,
                 label_receptor: Optional[str] = None):
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        self.clock = 0
        self.class_dim = class_dim
        self.learning_until = learning_until
        self.receptors = dict(receptors)
        self.image_receptor = image_receptor
        self.label_receptor = label_receptor
        self.plasticity_enabled = True

        self.sections: dict[str, _Section] = {}
        for spec in sections:
            if spec.name in self.sections or spec.name in self.receptors:
                raise ConfigError(f"duplicate section/receptor name {spec.name!r}")
            self.sections[spec.name] = _Section(spec)

        self.links: list[_Link] = []
        self._links_from: dict[str, list[_Link]] = {
            name: [] for name in list(self.sections) + list(self.receptors)
        }
        for spec in links:
            self.links.append(self._compile_link(spec))
            self._links_from[spec.from_name].append(self.links[-1])

        self._finalize_gating()
        max_latency = max((link.latency for link in self.links), default=1)
        self._ring: list[list[tuple[_Link, np.ndarray]]] = [[] for _ in range(max_latency + 1)]

    # -- construction ------------------------------------------------------

    def _size_of(self, name: str) -> int:
        if name in self.sections:
            return self.sections[name].spec.n
        if name in self.receptors:
            return self.receptors[name]
        raise ConfigError(f"link endpoint {name!r} is not a declared section or receptor")

    def _compile_link(self, spec: LinkSpec) -> _Link:
        from_size = self._size_of(spec.from_name)
        if spec.to_name not in self.sections:
            raise ConfigError(f"link target {spec.to_name!r} is not a section")
        to_section = self.sections[spec.to_name]
        to_size = to_section.spec.n
        from_is_receptor = spec.from_name in self.receptors

        pre, post = resolve_policy(spec.policy, from_size, to_size, self.class_dim)

        plastic = None
        if spec.kind == "plastic":
            params = to_section.spec.plasticity
            if params is None:
                raise ConfigError(
                    f"plastic link into {spec.to_name!r} but the section declares no plasticity"
                )
            connectivity = None
            if spec.probability < 1.0:
                connectivity = self.rng.random((to_size, from_size)) < spec.probability
            lo, hi = spec.ini_resource
            if lo == hi:
                initial = np.full((to_size, from_size), lo)
            else:
                initial = self.rng.uniform(lo, hi, size=(to_size, from_size))
            plastic = PlasticLinkState(
                from_size, to_size, params, spec.w_min, spec.w_max, initial, connectivity
            )
            n_pre_per_post = (
                connectivity.sum(axis=1).max() if connectivity is not None else from_size
            )
            if spec.max_pre is not None and n_pre_per_post > spec.max_pre:
                raise ConfigError(
                    f"plastic link {spec.from_name}->{spec.to_name}: "
                    f"{n_pre_per_post} presynaptic nodes exceed maxnpre {spec.max_pre}"
                )
            to_section.plastic_in.append(plastic)

        return _Link(spec, pre, post, from_is_receptor, plastic)

    def _finalize_gating(self) -> None:
        for link in self.links:
            target = self.sections[link.spec.to_name]
            if link.spec.kind == "gating":
                target.gated = True
                if link.spec.weight > 0:
                    target.default_closed = True
                if (
                    link.spec.weight < 0
                    and link.spec.from_name == link.spec.to_name
                    and _canon_policy(link.spec.policy) == "all_to_all_sections"
                ):
                    target.wta = True
        # A learning section feeding a winner-take-all stage one-to-one gets
        # competition-confirmed depression: the stage's spike at t
        # acknowledges the learning spike at t-1.
        for link in self.links:
            if link.spec.from_name not in self.sections:
                continue
            source = self.sections[link.spec.from_name]
            target = self.sections[link.spec.to_name]
            if (
                target.wta
                and link.spec.kind == "static"
                and _canon_policy(link.spec.policy) == "aligned"
                and source.spec.n == target.spec.n
            ):
                target.race_source = source
                for state in source.plastic_in:
                    state.confirmed_depression = True
                    target.confirm_hooks.append(state)

    # -- stepping ----------------------------------------------------------

    def _plasticity_active(self, t: int) -> bool:
        return self.plasticity_enabled and t < self.learning_until

    def _deliver(self, link: _Link, pre_idx: np.ndarray, t: int) -> None:
        kind = link.spec.kind
        target = self.sections[link.spec.to_name]
        if kind == "plastic":
            state = link.plastic
            if self._plasticity_active(t):
                state.pre_spikes(pre_idx, t)
            target.potential += state.input_for(pre_idx)
            return
        posts = link.posts_for(pre_idx)
        if len(posts) == 0:
            return
        w = link.spec.weight
        if kind == "static":
            if len(pre_idx) == 1:
                target.potential[posts] += w
            else:
                np.add.at(target.potential, posts, w)
        elif kind == "gating":
            if len(pre_idx) == 1:
                target.gate_level[posts] += w
            else:
                np.add.at(target.gate_level, posts, w)
            if w > 0:
                target.gate_opened[posts] = True
        else:  # reward
            if self._plasticity_active(t):
                for state in target.plastic_in:
                    state.reward(posts, t)

    def step(self, external: Optional[dict[str, np.ndarray]] = None) -> dict[str, np.ndarray]:
        """Advance one millisecond; returns fired indices per section."""
        t = self.clock

        for section in self.sections.values():
            section.potential *= section.decay

        # arrivals: pending ring slot, then same-step receptor spikes
        slot_index = t % len(self._ring)
        pending, self._ring[slot_index] = self._ring[slot_index], []
        for link, pre_idx in pending:
            self._deliver(link, pre_idx, t)

        if external:
            for name, nodes in external.items():
                if len(nodes) == 0:
                    continue
                if name not in self.receptors:
                    raise SimulationError(f"external spike on unknown receptor {name!r}")
                if nodes.max() >= self.receptors[name] or nodes.min() < 0:
                    raise SimulationError(
                        f"external spike node out of range for receptor {name!r}"
                    )
                for link in self._links_from[name]:
                    if link.latency == 0:
                        self._deliver(link, nodes, t)
                    else:
                        self._ring[(t + link.latency) % len(self._ring)].append((link, nodes))

        # firing: a same-step race within a winner-take-all group resolves
        # by the strength of the spikes that drove the candidates (the
        # upstream firing potentials), the evidence a continuous-time race
        # would order by
        fired: dict[str, np.ndarray] = {}
        staged_values: list[tuple[_Section, np.ndarray, np.ndarray]] = []
        for name, section in self.sections.items():
            if DYNAMICS["floor"]:
                np.maximum(section.potential, 0.0, out=section.potential)
            mask = section.potential >= THRESHOLD
            if section.gated:
                mask &= section.gate_level >= 0
                if section.default_closed:
                    mask &= section.gate_opened
            idx = np.nonzero(mask)[0]
            if section.wta and len(idx) > 1:
                ranking = (section.race_source.fire_value
                           if section.race_source is not None else section.potential)
                winner = wta_resolve(idx, ranking, self.rng)
                if DYNAMICS["wta_loser_reset"]:
                    section.potential[idx] = 0.0
                idx = np.array([winner], dtype=np.int64)
            if len(idx):
                staged_values.append((section, idx, section.potential[idx].copy()))
                if DYNAMICS["soft_reset"]:
                    section.potential[idx] -= THRESHOLD
                else:
                    section.potential[idx] = 0.0
            fired[name] = idx
        for section, idx, values in staged_values:
            section.fire_value[idx] = values

        # propagation, depression, and competition acknowledgements
        plasticity_active = self._plasticity_active(t)
        for name, idx in fired.items():
            if len(idx) == 0:
                continue
            for link in self._links_from[name]:
                self._ring[(t + link.latency) % len(self._ring)].append((link, idx))
            section = self.sections[name]
            if plasticity_active:
                for state in section.plastic_in:
                    state.post_spikes(idx, t)
                for state in section.confirm_hooks:
                    state.confirm(idx, t - 1, t)

        for section in self.sections.values():
            if section.gated:
                section.gate_level[:] = 0.0
                section.gate_opened[:] = False

        self.clock = t + 1
        return fired

    # -- convenience -------------------------------------------------------

    def section_sizes(self) -> dict[str, int]:
        return {name: s.spec.n for name, s in self.sections.items()}

    def plastic_weights(self, to_name: str) -> np.ndarray:
        """Effective weight matrix of the (single) plastic link into a section."""
        states = self.sections[to_name].plastic_in
        if not states:
            raise SimulationError(f"section {to_name!r} has no plastic input link")
        return states[0].w_eff

    def find_link(self, from_name: str, to_name: str, kind: Optional[str] = None,
                  policy: Optional[str] = None) -> _Link:
        for link in self.links:
            if link.spec.from_name != from_name or link.spec.to_name != to_name:
                continue
            if kind is not None and link.spec.kind != kind:
                continue
            if policy is not None and _canon_policy(link.spec.policy) != _canon_policy(policy):
                continue
            return link
        raise KeyError(f"no link {from_name}->{to_name} (kind={kind}, policy={policy})")


@dataclass
class RunResult:
    fired_counts: dict[str, int] = field(default_factory=dict)


def run(network: Network, stream, t_start: int, t_end: int,
        plasticity_enabled: bool = True,
        on_fire: Optional[Callable[[int, dict[str, np.ndarray]], None]] = None,
        spike_log=None) -> RunResult:
    """Drive the network over [t_start, t_end) with a spike stream.

    ``stream`` may be None (silent input). ``on_fire`` sees every step's
    fired dict; ``spike_log`` is an optional writable text file receiving
    one ``time,section,neuron_index`` line per spike.
    """
    if t_start > t_end:
        raise SimulationError(f"t_start {t_start} exceeds t_end {t_end}")
    if network.clock != t_start:
        raise SimulationError(
            f"network clock is at {network.clock}, cannot start run at {t_start}"
        )
    network.plasticity_enabled = plasticity_enabled
    result = RunResult({name: 0 for name in network.sections})

    empty = np.empty(0, dtype=np.int64)
    if stream is None:
        batches = ((t, empty, empty) for t in range(t_start, t_end))
    else:
        batches = stream.batches(t_start, t_end)

    image_receptor = network.image_receptor
    label_receptor = network.label_receptor
    for t, pixels, classes in batches:
        external = {}
        if len(pixels):
            if image_receptor is None:
                raise SimulationError("stream provides pixel spikes but the network has no image receptor")
            external[image_receptor] = pixels
        if len(classes):
            if label_receptor is None:
                raise SimulationError("stream provides label spikes but the network has no label receptor")
            external[label_receptor] = classes
        fired = network.step(external)
        if on_fire is not None:
            on_fire(t, fired)
        if spike_log is not None:
            for name, idx in fired.items():
                for i in idx:
                    spike_log.write(f"{t},{name},{i}\n")
        for name, idx in fired.items():
            if len(idx):
                result.fired_counts[name] += len(idx)
    return result
