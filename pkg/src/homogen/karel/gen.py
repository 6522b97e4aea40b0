"""Samplers and dataset assembly for the Karel domain.

Two grid distributions: a broad one covering every legal grid shape and a
narrow one concentrated on large grids with exact wall/marker cell counts.
Programs come from a weighted grammar walk (with a token cap) or, for
curriculum-style augmentation, from uniform action-only token strings.
A :class:`SynthesisTask` bundles a program with input/output grid pairs plus
one held-out pair; task assembly resamples grids until every shown execution
succeeds and the shown runs jointly cover every conditional arm of the
program.
"""

from __future__ import annotations

import enum
import itertools
import random
from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from typing import Any

from ..homogenizer import SalientSpec
from .interp import DEFAULT_STEP_LIMIT, branch_arms, execute
from .lang import (
    ACTIONS,
    MAX_REPEAT,
    PREDICATES,
    Action,
    If,
    IfElse,
    KarelProgram,
    Not,
    Pred,
    Repeat,
    Seq,
    Stmt,
    While,
    emit_tokens,
    program_salients,
)
from .world import MAX_SIDE, MIN_SIDE, DIRECTIONS, KarelGrid, grid_from_json, grid_salients, grid_to_json

GridSampler = Callable[[random.Random], KarelGrid]


class MarkerCountDist(enum.Enum):
    """Pile-size distribution for cells that receive markers.

    GEOM counts fair-coin flips until the first head, clamped to at most 9;
    UNIFORM is uniform over 1..9; ANTIGEOM mirrors GEOM as 10 - k, clamped
    to at least 1, so big piles become the common case.
    """

    GEOM = "geom"
    UNIFORM = "uniform"
    ANTIGEOM = "antigeom"


def sample_marker_count(rng: random.Random, dist: MarkerCountDist) -> int:
    if dist is MarkerCountDist.UNIFORM:
        return rng.randint(1, 9)
    count = 1
    while rng.random() >= 0.5:
        count += 1
    if dist is MarkerCountDist.GEOM:
        return min(count, 9)
    return max(10 - count, 1)


def sample_uniform_grid(rng: random.Random) -> KarelGrid:
    """Broad grid distribution.

    Draw order: width, height uniform over 2..16; marker and wall cell rates
    uniform over [0,1); per cell in row-major order a marker coin then a
    wall coin (a wall wins the collision) then, for marker cells, a pile
    size uniform over 1..9; finally the agent cell uniform over non-wall
    cells and a uniform facing. All-wall grids are redrawn from scratch.
    """
    while True:
        width = rng.randint(MIN_SIDE, MAX_SIDE)
        height = rng.randint(MIN_SIDE, MAX_SIDE)
        marker_rate = rng.random()
        wall_rate = rng.random()
        walls = set()
        markers = {}
        for j in range(height):
            for i in range(width):
                wants_marker = rng.random() < marker_rate
                wants_wall = rng.random() < wall_rate
                if wants_wall:
                    walls.add((i, j))
                elif wants_marker:
                    markers[(i, j)] = rng.randint(1, 9)
        free = [(i, j) for j in range(height) for i in range(width) if (i, j) not in walls]
        if not free:
            continue
        pos = free[rng.randrange(len(free))]
        direction = DIRECTIONS[rng.randrange(4)]
        return KarelGrid(
            width=width,
            height=height,
            walls=frozenset(walls),
            markers=markers,
            karel_pos=pos,
            karel_dir=direction,
        )


@dataclass(frozen=True)
class NarrowGridParams:
    """Exact-count parameters for the narrow grid distribution."""

    r_wall: float
    r_marker: float
    marker_dist: MarkerCountDist = MarkerCountDist.GEOM

    def __post_init__(self) -> None:
        if not (0.0 <= self.r_wall <= 1.0 and 0.0 <= self.r_marker <= 1.0):
            raise ValueError("cell rates must be in [0, 1]")
        if self.r_wall + self.r_marker > 1.0:
            raise ValueError("r_wall + r_marker must not exceed 1")


#: The narrow-distribution parameter grid used for stress evaluation:
#: four (r_wall, r_marker) columns crossed with the three pile-size shapes.
NARROW_SWEEP_PARAMS = tuple(
    NarrowGridParams(r_wall=rw, r_marker=rm, marker_dist=dist)
    for (rw, rm) in ((0.05, 0.85), (0.25, 0.65), (0.65, 0.25), (0.85, 0.05))
    for dist in MarkerCountDist
)


def sample_narrow_grid(rng: random.Random, params: NarrowGridParams) -> KarelGrid:
    """Narrow grid distribution.

    Draw order: width, height uniform over 10..16; exactly
    floor(cells * r_wall) wall cells sampled without replacement, then
    exactly floor(cells * r_marker) marker cells from the remainder, then a
    pile size per marker cell in sampled order, then the agent cell uniform
    over non-wall cells and a uniform facing.
    """
    width = rng.randint(10, MAX_SIDE)
    height = rng.randint(10, MAX_SIDE)
    cells = [(i, j) for j in range(height) for i in range(width)]
    n_walls = int(len(cells) * params.r_wall)
    n_markers = int(len(cells) * params.r_marker)
    walls = rng.sample(cells, n_walls)
    wall_set = set(walls)
    remaining = [c for c in cells if c not in wall_set]
    if not remaining:
        raise ValueError("no non-wall cell left for the agent")
    marker_cells = rng.sample(remaining, n_markers)
    markers = {cell: sample_marker_count(rng, params.marker_dist) for cell in marker_cells}
    pos = remaining[rng.randrange(len(remaining))]
    direction = DIRECTIONS[rng.randrange(4)]
    return KarelGrid(
        width=width,
        height=height,
        walls=frozenset(walls),
        markers=markers,
        karel_pos=pos,
        karel_dir=direction,
    )


# ---------------------------------------------------------------------------
# Program sampling.


@dataclass(frozen=True)
class ProductionTable:
    """Statement-kind weights for the grammar walk.

    The mean number of child statements per statement
    (2*seq + if + 2*if_else + while + repeat) must stay below 1, otherwise
    the walk's expected size is infinite. ``token_cap`` bounds the emitted
    token count of the whole program; oversize draws are rejected and
    redrawn. ``negate_p`` is the chance a condition gets wrapped in not().
    """

    action_p: float = 0.55
    seq_p: float = 0.25
    if_p: float = 0.06
    if_else_p: float = 0.04
    while_p: float = 0.06
    repeat_p: float = 0.04
    negate_p: float = 0.2
    token_cap: int = 60

    def __post_init__(self) -> None:
        weights = (
            self.action_p,
            self.seq_p,
            self.if_p,
            self.if_else_p,
            self.while_p,
            self.repeat_p,
        )
        if any(w < 0 for w in weights):
            raise ValueError("statement weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("statement weights must sum to 1")
        if not 0.0 <= self.negate_p <= 1.0:
            raise ValueError("negate_p must be in [0, 1]")
        if self.mean_children >= 1.0:
            raise ValueError(
                "expected children per statement must stay below 1 "
                f"(got {self.mean_children:.3f}); the walk would not terminate"
            )
        if self.token_cap < 8:
            raise ValueError("token_cap must be at least 8 (the smallest program)")

    @property
    def mean_children(self) -> float:
        return (
            2 * self.seq_p + self.if_p + 2 * self.if_else_p + self.while_p + self.repeat_p
        )


DEFAULT_PRODUCTIONS = ProductionTable()

_MAX_SAMPLE_ATTEMPTS = 10_000


class _Oversize(Exception):
    pass


def sample_program(
    rng: random.Random, table: ProductionTable = DEFAULT_PRODUCTIONS
) -> KarelProgram:
    """Draw a program from the grammar walk, rejecting oversize draws.

    Sequences in the result are right-nested, matching what the parser
    builds, so emitted programs parse back to equal ASTs.
    """
    for _ in range(_MAX_SAMPLE_ATTEMPTS):
        budget = [table.token_cap]  # loose node bound; exact token check below
        try:
            body = _sample_stmt(rng, table, budget)
        except _Oversize:
            continue
        program = KarelProgram(_right_nest(body))
        if len(emit_tokens(program)) <= table.token_cap:
            return program
    raise RuntimeError(
        f"no program under {table.token_cap} tokens in {_MAX_SAMPLE_ATTEMPTS} attempts; "
        "the production table is too expansion-heavy"
    )


def _sample_stmt(rng: random.Random, table: ProductionTable, budget: list[int]) -> Stmt:
    budget[0] -= 1
    if budget[0] < 0:
        raise _Oversize
    roll = rng.random()
    edge = table.action_p
    if roll < edge:
        return Action(ACTIONS[rng.randrange(len(ACTIONS))])
    edge += table.seq_p
    if roll < edge:
        first = _sample_stmt(rng, table, budget)
        rest = _sample_stmt(rng, table, budget)
        return Seq(first, rest)
    edge += table.if_p
    if roll < edge:
        return If(_sample_cond(rng, table), _sample_stmt(rng, table, budget))
    edge += table.if_else_p
    if roll < edge:
        cond = _sample_cond(rng, table)
        then_body = _sample_stmt(rng, table, budget)
        else_body = _sample_stmt(rng, table, budget)
        return IfElse(cond, then_body, else_body)
    edge += table.while_p
    if roll < edge:
        return While(_sample_cond(rng, table), _sample_stmt(rng, table, budget))
    return Repeat(rng.randrange(MAX_REPEAT + 1), _sample_stmt(rng, table, budget))


def _sample_cond(rng: random.Random, table: ProductionTable) -> Pred | Not:
    pred = Pred(PREDICATES[rng.randrange(len(PREDICATES))])
    if rng.random() < table.negate_p:
        return Not(pred)
    return pred


def _right_nest(stmt: Stmt) -> Stmt:
    match stmt:
        case Action():
            return stmt
        case Seq():
            parts = _seq_parts(stmt)
            node = parts[-1]
            for part in reversed(parts[:-1]):
                node = Seq(part, node)
            return node
        case If(cond=cond, body=body):
            return If(cond, _right_nest(body))
        case IfElse(cond=cond, then_body=then_body, else_body=else_body):
            return IfElse(cond, _right_nest(then_body), _right_nest(else_body))
        case While(cond=cond, body=body):
            return While(cond, _right_nest(body))
        case Repeat(times=times, body=body):
            return Repeat(times, _right_nest(body))
    raise TypeError(f"not a statement: {stmt!r}")


def _seq_parts(stmt: Stmt) -> list[Stmt]:
    if isinstance(stmt, Seq):
        return _seq_parts(stmt.first) + _seq_parts(stmt.rest)
    return [_right_nest(stmt)]


def sample_action_only(rng: random.Random, length: int) -> KarelProgram:
    """Uniform action token string of the given length, as a program."""
    if not 1 <= length <= 20:
        raise ValueError("length must be in 1..20")
    names = [ACTIONS[rng.randrange(len(ACTIONS))] for _ in range(length)]
    return _actions_to_program(names)


def _actions_to_program(names: Sequence[str]) -> KarelProgram:
    node: Stmt = Action(names[-1])
    for name in reversed(names[:-1]):
        node = Seq(Action(name), node)
    return KarelProgram(node)


def enumerate_action_only(rng: random.Random, length: int, limit: int) -> list[KarelProgram]:
    """Distinct action-only programs of one length, at most ``limit`` of them.

    All 5**length programs in lexicographic action order when they fit under
    the limit; otherwise ``limit`` distinct programs drawn uniformly.
    """
    if not 1 <= length <= 20:
        raise ValueError("length must be in 1..20")
    if limit < 1:
        raise ValueError("limit must be >= 1")
    total = len(ACTIONS) ** length
    if total <= limit:
        combos: Iterable[tuple[str, ...]] = itertools.product(ACTIONS, repeat=length)
        return [_actions_to_program(combo) for combo in combos]
    seen: set[tuple[str, ...]] = set()
    ordered: list[tuple[str, ...]] = []
    while len(ordered) < limit:
        combo = tuple(ACTIONS[rng.randrange(len(ACTIONS))] for _ in range(length))
        if combo not in seen:
            seen.add(combo)
            ordered.append(combo)
    return [_actions_to_program(combo) for combo in ordered]


_NODE_KINDS = {"if": If, "ifElse": IfElse, "while": While, "repeat": Repeat}


def has_nested(program: KarelProgram, outer: str, inner: str) -> bool:
    """Whether a node of kind ``inner`` sits inside the body of an ``outer``."""
    try:
        outer_t = _NODE_KINDS[outer]
        inner_t = _NODE_KINDS[inner]
    except KeyError as exc:
        raise ValueError(f"unknown node kind {exc.args[0]!r}; expected one of "
                         f"{sorted(_NODE_KINDS)}") from None
    return _scan_nested(program.body, outer_t, inner_t, inside=False)


def _scan_nested(stmt: Stmt, outer_t: type, inner_t: type, inside: bool) -> bool:
    if inside and isinstance(stmt, inner_t):
        return True
    entered = inside or isinstance(stmt, outer_t)
    match stmt:
        case Action():
            return False
        case Seq(first=first, rest=rest):
            return _scan_nested(first, outer_t, inner_t, inside) or _scan_nested(
                rest, outer_t, inner_t, inside
            )
        case If(body=body) | While(body=body) | Repeat(body=body):
            return _scan_nested(body, outer_t, inner_t, entered)
        case IfElse(then_body=then_body, else_body=else_body):
            return _scan_nested(then_body, outer_t, inner_t, entered) or _scan_nested(
                else_body, outer_t, inner_t, entered
            )
    raise TypeError(f"not a statement: {stmt!r}")


def satisfies_action_pruning(program: KarelProgram) -> bool:
    """Legacy curriculum filter: at least two actions, one of them a move."""
    tokens = emit_tokens(program)
    total = sum(tokens.count(name) for name in ACTIONS)
    return total >= 2 and tokens.count("move") >= 1


# ---------------------------------------------------------------------------
# Tasks.


@dataclass(frozen=True)
class SynthesisTask:
    """A program with shown input/output pairs and one held-out pair.

    Every shown and held-out input executes the program without crashing,
    and the shown runs together cover every conditional arm.
    """

    program: KarelProgram
    pairs: tuple[tuple[KarelGrid, KarelGrid], ...]
    held_out: tuple[KarelGrid, KarelGrid]


class UncoverableProgramError(RuntimeError):
    """Grid resampling could not produce a valid task for the program."""

    def __init__(
        self,
        message: str,
        *,
        attempts: int,
        crash_counts: dict[str, int],
        missing_arm_counts: dict[tuple[int, str], int],
    ):
        super().__init__(message)
        self.attempts = attempts
        self.crash_counts = crash_counts
        self.missing_arm_counts = missing_arm_counts


def make_task(
    program: KarelProgram,
    grid_sampler: GridSampler,
    rng: random.Random,
    n_pairs: int = 5,
    retry_limit: int = 1000,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> SynthesisTask:
    """Assemble a task by resampling grid batches until one validates.

    Each attempt draws ``n_pairs`` shown inputs plus one held-out input. A
    crash on any of them, or a conditional arm no shown run reaches, discards
    the whole batch. After ``retry_limit`` failed batches the program is
    reported uncoverable, with counts of what kept failing.
    """
    if not 1 <= n_pairs <= 5:
        raise ValueError("n_pairs must be in 1..5")
    if retry_limit < 1:
        raise ValueError("retry_limit must be >= 1")
    required = branch_arms(program)
    crash_counts: Counter[str] = Counter()
    missing_counts: Counter[tuple[int, str]] = Counter()
    for _ in range(retry_limit):
        # Sample and run one grid at a time; the whole batch is discarded on
        # the first crash, so later grids need not be drawn at all.
        grids = []
        results = []
        for _k in range(n_pairs + 1):
            grid = grid_sampler(rng)
            result = execute(program, grid, step_limit)
            if not result.success:
                crash_counts[result.crash.value] += 1
                break
            grids.append(grid)
            results.append(result)
        if len(grids) != n_pairs + 1:
            continue
        covered = frozenset().union(*(r.branches_taken for r in results[:n_pairs]))
        if not required <= covered:
            missing_counts.update(required - covered)
            continue
        pairs = tuple((grid, r.output) for grid, r in zip(grids[:n_pairs], results[:n_pairs]))
        return SynthesisTask(program=program, pairs=pairs, held_out=(grids[-1], results[-1].output))
    raise UncoverableProgramError(
        f"no valid task in {retry_limit} grid batches "
        f"(crashes: {dict(crash_counts)}, uncovered arms: {dict(missing_counts)})",
        attempts=retry_limit,
        crash_counts=dict(crash_counts),
        missing_arm_counts=dict(missing_counts),
    )


DEFAULT_AUGMENT_PER_LENGTH = 20_000
DEFAULT_AUGMENT_LENGTHS = tuple(range(1, 21))


def augment_action_only(
    base: Sequence[SynthesisTask],
    grid_sampler: GridSampler,
    rng: random.Random,
    per_length: int = DEFAULT_AUGMENT_PER_LENGTH,
    lengths: Sequence[int] = DEFAULT_AUGMENT_LENGTHS,
    n_pairs: int = 5,
    retry_limit: int = 1000,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> list[SynthesisTask]:
    """Append tasks for uniform action-only programs of each given length.

    With the defaults that is 20 000 tasks for each length 1..20, i.e.
    400 000 appended tasks. The base tasks are preserved, in order, at the
    front of the returned list.
    """
    out = list(base)
    for length in lengths:
        for _ in range(per_length):
            program = sample_action_only(rng, length)
            out.append(
                make_task(
                    program,
                    grid_sampler,
                    rng,
                    n_pairs=n_pairs,
                    retry_limit=retry_limit,
                    step_limit=step_limit,
                )
            )
    return out


# ---------------------------------------------------------------------------
# Task-level salient features and JSON.


def _ratio_decile(ratio: float) -> int:
    # Floor into ten bins with a nudge so exact boundary fractions such as
    # 3/10 do not fall a bin short through float rounding.
    return min(int(ratio * 10.0 + 1e-12), 9)


def task_salients(task: SynthesisTask) -> dict[str, Any]:
    """Program features, pair count, and decile-binned mean grid ratios.

    The marker and wall ratios average over the shown inputs only, then fall
    into deciles 0..9. Per-input grid features ride along under ``grids``.
    """
    program = program_salients(task.program)
    shown = [grid_salients(grid) for grid, _ in task.pairs]
    mean_marker = sum(g["marker_ratio"] for g in shown) / len(shown)
    mean_wall = sum(g["wall_ratio"] for g in shown) / len(shown)
    return {
        "number_of_grids": len(task.pairs),
        "size": program["size"],
        "control_flow_count": program["control_flow_count"],
        "nesting_depth": program["nesting_depth"],
        "marker_ratio_decile": _ratio_decile(mean_marker),
        "wall_ratio_decile": _ratio_decile(mean_wall),
        "grids": shown,
    }


SIZE_DOMAIN = tuple(range(8, 161))
CONTROL_FLOW_DOMAIN = tuple(range(0, 13))
NESTING_DOMAIN = tuple(range(0, 9))
NUMBER_OF_GRIDS_DOMAIN = (1, 2, 3, 4, 5)
DECILE_DOMAIN = tuple(range(10))


def _clamped_field(field_name: str, low: int, high: int) -> Callable[[SynthesisTask], int]:
    def extract(task: SynthesisTask) -> int:
        value = task_salients(task)[field_name]
        return min(max(value, low), high)

    return extract


def salient_specs() -> dict[str, SalientSpec]:
    """Named salient variables over synthesis tasks."""
    return {
        "number_of_grids": SalientSpec(
            "number_of_grids", NUMBER_OF_GRIDS_DOMAIN, _clamped_field("number_of_grids", 1, 5)
        ),
        "size": SalientSpec("size", SIZE_DOMAIN, _clamped_field("size", 8, 160)),
        "control_flow_count": SalientSpec(
            "control_flow_count", CONTROL_FLOW_DOMAIN, _clamped_field("control_flow_count", 0, 12)
        ),
        "nesting_depth": SalientSpec(
            "nesting_depth", NESTING_DOMAIN, _clamped_field("nesting_depth", 0, 8)
        ),
        "marker_ratio_decile": SalientSpec(
            "marker_ratio_decile", DECILE_DOMAIN, _clamped_field("marker_ratio_decile", 0, 9)
        ),
        "wall_ratio_decile": SalientSpec(
            "wall_ratio_decile", DECILE_DOMAIN, _clamped_field("wall_ratio_decile", 0, 9)
        ),
    }


def task_to_json(task: SynthesisTask) -> dict[str, Any]:
    return {
        "program": emit_tokens(task.program),
        "pairs": [
            {"in": grid_to_json(inp), "out": grid_to_json(out)} for inp, out in task.pairs
        ],
        "held_out": {
            "in": grid_to_json(task.held_out[0]),
            "out": grid_to_json(task.held_out[1]),
        },
    }


def task_from_json(obj: dict[str, Any]) -> SynthesisTask:
    from .lang import parse_program

    try:
        program = parse_program(obj["program"])
        pairs = tuple(
            (grid_from_json(p["in"]), grid_from_json(p["out"])) for p in obj["pairs"]
        )
        held = (grid_from_json(obj["held_out"]["in"]), grid_from_json(obj["held_out"]["out"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed task object: {exc}") from None
    return SynthesisTask(program=program, pairs=pairs, held_out=held)


# ---------------------------------------------------------------------------
# Task streams for generation and homogenization.


class GenerationStallError(RuntimeError):
    """Too many consecutive programs failed task assembly."""


def task_source(
    grid_sampler: GridSampler,
    n_pairs: int | str = 5,
    table: ProductionTable = DEFAULT_PRODUCTIONS,
    retry_limit: int = 400,
    step_limit: int = DEFAULT_STEP_LIMIT,
    max_program_attempts: int = 100,
    program_filter: Callable[[KarelProgram], bool] | None = None,
) -> Callable[[random.Random], SynthesisTask]:
    """A task-per-call sampler suitable for generation and homogenization.

    Each call samples a program (redrawing any the optional filter rejects),
    picks the pair count (uniform over 1..5 when ``n_pairs`` is the string
    ``"uniform"``), and assembles a task; programs that turn out uncoverable
    are dropped and redrawn. The stream's ``retry_limit`` is deliberately
    lower than :func:`make_task`'s default so hard-to-exercise programs get
    replaced instead of eating the grid budget. After
    ``max_program_attempts`` consecutive failures the stream reports a stall
    instead of spinning.
    """
    if isinstance(n_pairs, str):
        if n_pairs != "uniform":
            raise ValueError("n_pairs must be an int in 1..5 or the string 'uniform'")
    elif not 1 <= n_pairs <= 5:
        raise ValueError("n_pairs must be in 1..5")

    def draw(rng: random.Random) -> SynthesisTask:
        for _ in range(max_program_attempts):
            program = sample_program(rng, table)
            if program_filter is not None and not program_filter(program):
                continue
            pairs = rng.randint(1, 5) if n_pairs == "uniform" else n_pairs
            try:
                return make_task(
                    program,
                    grid_sampler,
                    rng,
                    n_pairs=pairs,
                    retry_limit=retry_limit,
                    step_limit=step_limit,
                )
            except UncoverableProgramError:
                continue
        raise GenerationStallError(
            f"{max_program_attempts} consecutive programs failed task assembly; "
            "the grid distribution likely cannot exercise the sampled programs"
        )

    return draw
