"""Seeded benchmark generators: random single-agent models and drone maps."""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import asdict, dataclass

from .model import Model, ReachabilityGoal, validate_model

# ---------------------------------------------------------------------------
# random models
# ---------------------------------------------------------------------------

AGENT, ENV = 0, 1


@dataclass
class RandomModelSpec:
    n_states: int
    class_size_mode: str = "logarithmic"  # or "linear"
    seed: int = 0
    connections: int | None = None  # default 2n
    n_actions: int | None = None  # default max(2, ceil(log2 n))
    n_winning: int | None = None  # default max(1, ceil(n / 20))
    n_paths: int | None = None  # default max(2, ceil(sqrt n))
    repetitions: int = 3
    max_class_size: int | None = None  # default from class_size_mode
    n_decorations: int = 2
    full_protocol: bool = True  # every agent action legal everywhere
    # "hyperedge": each repetition gives one agent action a whole subset of
    # connections; "edge": each chosen connection gets its own random action
    labeling: str = "edge"
    # orient extra connections from earlier to later paths when possible
    forward_edges: bool = False

    def resolved(self) -> "RandomModelSpec":
        n = self.n_states
        if n < 2:
            raise ValueError("random models need at least two states")
        if self.class_size_mode not in ("logarithmic", "linear"):
            raise ValueError(f"unknown class size mode {self.class_size_mode!r}")
        bound = self.max_class_size
        if bound is None:
            if self.class_size_mode == "logarithmic":
                bound = math.ceil(math.log2(n))
            else:
                bound = max(2, math.ceil(0.1 * n))
        if bound < 1:
            raise ValueError("class size bound must be at least 1")
        return RandomModelSpec(
            n_states=n,
            class_size_mode=self.class_size_mode,
            seed=self.seed,
            connections=self.connections if self.connections is not None else 2 * n,
            n_actions=self.n_actions if self.n_actions is not None else max(2, math.ceil(math.log2(n))),
            n_winning=self.n_winning if self.n_winning is not None else max(1, math.ceil(n / 20)),
            n_paths=self.n_paths if self.n_paths is not None else max(2, math.ceil(math.sqrt(n))),
            repetitions=self.repetitions,
            max_class_size=bound,
            n_decorations=self.n_decorations,
            full_protocol=self.full_protocol,
            labeling=self.labeling,
            forward_edges=self.forward_edges,
        )

    def to_dict(self) -> dict:
        return asdict(self.resolved())


def _random_partition(rng: random.Random, items: list[int], bound: int) -> list[list[int]]:
    items = list(items)
    rng.shuffle(items)
    classes = []
    i = 0
    while i < len(items):
        size = rng.randint(1, bound)
        classes.append(sorted(items[i:i + size]))
        i += size
    return classes


def gen_random(spec: RandomModelSpec) -> tuple[Model, ReachabilityGoal]:
    """Random agent-versus-environment model built around a set of paths."""
    spec = spec.resolved()
    rng = random.Random(spec.seed)
    n = spec.n_states

    # paths over states 1..n-1, hanging off the initial state or earlier paths
    rest = list(range(1, n))
    rng.shuffle(rest)
    n_paths = min(spec.n_paths, len(rest))
    cuts = sorted(rng.sample(range(1, len(rest)), n_paths - 1)) if n_paths > 1 else []
    paths = [rest[a:b] for a, b in zip([0] + cuts, cuts + [len(rest)])]
    path_of = {0: -1}
    edges: dict[int, set[int]] = {q: set() for q in range(n)}
    for p, path in enumerate(paths):
        for q in path:
            path_of[q] = p
        anchors = [0] + [q for earlier in paths[:p] for q in earlier[:-1]]
        edges[rng.choice(anchors)].add(path[0])
        for a, b in zip(path, path[1:]):
            edges[a].add(b)

    finals = [path[-1] for path in paths]
    winning = set(rng.sample(finals, min(spec.n_winning, len(finals))))
    for w in winning:
        edges[w] = {w}
    open_nodes = [q for q in range(n) if q not in winning]
    # position of each state when the paths are laid end to end
    order = {0: -1}
    for path in paths:
        for q in path:
            order[q] = len(order)
    for q in finals:
        if q not in winning:
            others = [r for r in range(n) if path_of[r] != path_of[q]]
            later = [r for r in others if order[r] > order[q]]
            edges[q].add(rng.choice(later if spec.forward_edges and later else others))

    # extra connections between distinct paths
    budget = spec.connections - sum(len(e) for e in edges.values())
    attempts = 0
    while budget > 0 and attempts < 50 * n:
        attempts += 1
        a = rng.choice(open_nodes)
        b = rng.randrange(n)
        if spec.forward_edges and order[b] < order[a] and b not in winning and a != 0:
            a, b = b, a
        if path_of[a] == path_of[b] or b in edges[a] or a in winning:
            continue
        edges[a].add(b)
        budget -= 1

    # epistemic classes and class-wide agent protocols
    classes = _random_partition(rng, list(range(n)), spec.max_class_size)
    agent_actions: list[tuple[int, ...]] = [()] * n
    for cls in classes:
        if spec.full_protocol:
            acts = tuple(range(spec.n_actions))
        else:
            k = rng.randint(min(2, spec.n_actions), spec.n_actions)
            acts = tuple(sorted(rng.sample(range(spec.n_actions), k)))
        for q in cls:
            agent_actions[q] = acts

    # labelled transitions: agent action -> set of targets (environment picks one)
    labels: list[dict[int, set[int]]] = []
    for q in range(n):
        out = sorted(edges[q])
        lab: dict[int, set[int]] = {a: set() for a in agent_actions[q]}
        for _ in range(spec.repetitions):
            chosen = rng.sample(out, rng.randint(1, len(out)))
            if spec.labeling == "hyperedge":
                lab[rng.choice(agent_actions[q])].update(chosen)
            else:
                for target in chosen:
                    lab[rng.choice(agent_actions[q])].add(target)
        covered = set().union(*lab.values())
        for target in out:
            if target not in covered:
                lab[rng.choice(agent_actions[q])].add(target)
        for a in agent_actions[q]:
            if not lab[a]:
                lab[a].add(rng.choice(out))
        labels.append(lab)

    env_base = spec.n_actions
    protocol_env = []
    transitions = {}
    for q in range(n):
        width = max(len(t) for t in labels[q].values())
        env_acts = tuple(env_base + j for j in range(width))
        protocol_env.append(env_acts)
        for a, targets in labels[q].items():
            ordered = sorted(targets)
            for j, e in enumerate(env_acts):
                transitions[(q, (a, e))] = ordered[j % len(ordered)]

    width = max(len(p) for p in protocol_env)
    valuation = {"win": frozenset(winning)}
    for d in range(spec.n_decorations):
        valuation[f"p{d}"] = frozenset(q for q in range(n) if rng.random() < 0.3)
    m = Model(
        n_agents=2,
        n_states=n,
        protocol=(tuple(agent_actions), tuple(protocol_env)),
        transitions=transitions,
        epistemic=(
            tuple(frozenset(c) for c in classes),
            tuple(frozenset([q]) for q in range(n)),
        ),
        valuation=valuation,
        action_names=tuple(f"a{i}" for i in range(spec.n_actions)) + tuple(f"e{j}" for j in range(width)),
    )
    return m, ReachabilityGoal((AGENT,), "win", 0)


# ---------------------------------------------------------------------------
# drones
# ---------------------------------------------------------------------------

DIRECTIONS = ("N", "W", "S", "E")
OPPOSITE = {0: 2, 1: 3, 2: 0, 3: 1}
WAIT = 4


@dataclass
class DroneModelSpec:
    map_size: int
    n_drones: int = 1
    initial_energy: int | None = None  # default 2 * map_size
    seed: int = 0
    extra_edge_rate: float = 0.3
    wind_rate: float = 0.5  # fraction of fly edges with a diversion alternative
    gps_confusion_rate: float = 0.5
    absorbing_targets: bool = True
    # a gust strikes after the drone has passed over its intended place
    gust_after_reading: bool = True

    def resolved(self) -> "DroneModelSpec":
        if self.map_size < 2 or self.n_drones < 1:
            raise ValueError("drone models need map_size >= 2 and at least one drone")
        energy = self.initial_energy if self.initial_energy is not None else 2 * self.map_size
        if energy < 0:
            raise ValueError("initial energy must be nonnegative")
        return DroneModelSpec(
            self.map_size, self.n_drones, energy, self.seed, self.extra_edge_rate,
            self.wind_rate, self.gps_confusion_rate, self.absorbing_targets, self.gust_after_reading,
        )

    def to_dict(self) -> dict:
        return asdict(self.resolved())


@dataclass
class DroneMap:
    # neighbours[place][direction] -> place or None
    neighbours: list[list[int | None]]
    # diversion[place][direction] -> alternative landing place or None
    diversion: list[list[int | None]]
    polluted: frozenset[int]
    confusable: list[frozenset[int]]  # GPS groups; singleton for reliable places

    def fly(self, place: int, direction: int, gust: bool) -> int:
        target = self.neighbours[place][direction]
        if target is None:
            return place
        if gust and self.diversion[place][direction] is not None:
            return self.diversion[place][direction]
        return target


def gen_map(spec: DroneModelSpec, rng: random.Random) -> DroneMap:
    n = spec.map_size
    nb: list[list[int | None]] = [[None] * 4 for _ in range(n)]
    # spanning tree from place 0 with return edges, so every place is reachable
    for child in range(1, n):
        while True:
            parent = rng.randrange(child)
            free = [d for d in range(4) if nb[parent][d] is None]
            if free:
                break
        d = rng.choice(free)
        nb[parent][d] = child
        nb[child][OPPOSITE[d]] = parent
    for place in range(n):
        for d in range(4):
            if nb[place][d] is None and rng.random() < spec.extra_edge_rate:
                other = rng.randrange(n)
                if other != place:
                    nb[place][d] = other
    diversion: list[list[int | None]] = [[None] * 4 for _ in range(n)]
    for place in range(n):
        for d in range(4):
            target = nb[place][d]
            if target is None or rng.random() >= spec.wind_rate:
                continue
            options = sorted({x for x in nb[place] if x is not None and x != target})
            if options:
                diversion[place][d] = rng.choice(options)
    polluted = frozenset(p for p in range(n) if rng.random() < 0.5)
    shaky = [p for p in range(n) if rng.random() < spec.gps_confusion_rate]
    rng.shuffle(shaky)
    groups = {p: frozenset([p]) for p in range(n)}
    for a, b in zip(shaky[0::2], shaky[1::2]):
        groups[a] = groups[b] = frozenset([a, b])
    return DroneMap(nb, diversion, polluted, [groups[p] for p in range(n)])


def map_neighbours(dm: DroneMap, place: int) -> set[int]:
    return {x for x in dm.neighbours[place] if x is not None}


def gen_drone(spec: DroneModelSpec) -> tuple[Model, ReachabilityGoal]:
    """Drones (agents 0..d-1) against the wind (agent d) on a random map.

    A global state is (positions, energies, shared visited set).  Every
    drone with energy may fly in any direction or wait; flying towards a
    missing neighbour leaves it in place.  A gust diverts a fly action to
    the edge's alternative landing place when one exists.
    """
    spec = spec.resolved()
    rng = random.Random(spec.seed)
    dm = gen_map(spec, rng)
    d = spec.n_drones
    everything = frozenset(range(spec.map_size))

    start = (tuple([0] * d), tuple([spec.initial_energy] * d), frozenset([0]))
    index = {start: 0}
    states = [start]
    env_actions = list(itertools.product((0, 1), repeat=d))
    raw: dict[tuple[int, tuple], int] = {}
    queue = deque([start])
    while queue:
        st = queue.popleft()
        pos, energy, visited = st
        src = index[st]
        per_drone = [range(5) if e > 0 else (WAIT,) for e in energy]
        absorbing = spec.absorbing_targets and visited == everything
        for acts in itertools.product(*per_drone):
            for gusts in env_actions:
                if absorbing:
                    nxt = st
                else:
                    new_pos = tuple(
                        p if a == WAIT else dm.fly(p, a, bool(g)) for p, a, g in zip(pos, acts, gusts)
                    )
                    seen = set(new_pos)
                    if spec.gust_after_reading:
                        seen.update(dm.fly(p, a, False) for p, a in zip(pos, acts) if a != WAIT)
                    new_energy = tuple(e - 1 if e > 0 else 0 for e in energy)
                    nxt = (new_pos, new_energy, visited | frozenset(seen))
                if nxt not in index:
                    index[nxt] = len(states)
                    states.append(nxt)
                    queue.append(nxt)
                env_id = 5 + env_actions.index(gusts)
                raw[(src, tuple(acts) + (env_id,))] = index[nxt]

    n = len(states)
    env_protocol = tuple(5 + i for i in range(len(env_actions)))
    protocol = []
    for k in range(d):
        protocol.append(tuple(tuple(range(5)) if s[1][k] > 0 else (WAIT,) for s in states))
    protocol.append(tuple(env_protocol for _ in states))

    gps = [min(group) for group in dm.confusable]
    epistemic = []
    for k in range(d):
        buckets: dict[tuple, list[int]] = {}
        for i, (pos, energy, visited) in enumerate(states):
            # the drone logs its own position and the visited places through its GPS
            seen_pos = tuple(gps[p] if j == k else p for j, p in enumerate(pos))
            seen_visited = frozenset(gps[p] for p in visited)
            buckets.setdefault((seen_pos, energy, seen_visited), []).append(i)
        epistemic.append(tuple(frozenset(b) for b in buckets.values()))
    epistemic.append(tuple(frozenset([i]) for i in range(n)))

    valuation = {
        "all_visited": frozenset(i for i, s in enumerate(states) if s[2] == everything),
        "polluted": frozenset(i for i, s in enumerate(states) if s[0][0] in dm.polluted),
    }
    names = DIRECTIONS + ("wait",) + tuple("wind" + "".join(map(str, g)) for g in env_actions)
    m = Model(
        n_agents=d + 1,
        n_states=n,
        protocol=tuple(protocol),
        transitions=raw,
        epistemic=tuple(epistemic),
        valuation=valuation,
        action_names=names,
    )
    return m, ReachabilityGoal(tuple(range(d)), "all_visited", 0)


def drone_map(spec: DroneModelSpec) -> DroneMap:
    """The map that ``gen_drone`` builds for these settings (same RNG stream)."""
    return gen_map(spec.resolved(), random.Random(spec.seed))


def check_generated(m: Model) -> None:
    problems = validate_model(m)
    if problems:
        raise AssertionError("generator produced an invalid model: " + "; ".join(problems[:5]))
