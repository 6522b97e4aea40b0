"""Karel program execution with crash-as-value semantics.

A run either succeeds with the final grid or reports a crash: moving into a
wall or off the grid, picking from an empty cell, stacking a tenth marker,
or exceeding the step limit. Steps count completed actions only; condition
checks are free. A ``while`` whose body completes an iteration without
executing a single action cannot ever change the world, so a still-true
condition at that point is reported as a step-limit crash instead of
spinning forever.

Each run also records which conditional arms it exercised. Conditionals
(``if``, ``if/else``, ``while``) are numbered in pre-order; ``if`` arms are
``then``/``else`` (an ``if`` without an else records ``else`` when the
condition fails), ``while`` arms are ``enter``/``skip``. ``repeat`` has no
branch. The pairs a program could ever produce come from
:func:`branch_arms`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .lang import Action, Cond, If, IfElse, KarelProgram, Not, Pred, Repeat, Seq, Stmt, While
from .world import DIR_DELTA, LEFT_OF, MAX_MARKERS, RIGHT_OF, KarelGrid

DEFAULT_STEP_LIMIT = 200

BranchArm = tuple[int, str]


class CrashReason(enum.Enum):
    MOVE_INTO_WALL = "MoveIntoWall"
    PICK_EMPTY = "PickEmpty"
    PUT_OVERFLOW = "PutOverflow"
    STEP_LIMIT = "StepLimit"


@dataclass(frozen=True)
class ExecResult:
    output: KarelGrid | None
    crash: CrashReason | None
    branches_taken: frozenset[BranchArm]
    steps: int

    @property
    def success(self) -> bool:
        return self.crash is None


class _Crash(Exception):
    def __init__(self, reason: CrashReason):
        self.reason = reason


Path = tuple[int, ...]


def _number_branches(stmt: Stmt, path: Path, table: dict[Path, int]) -> None:
    match stmt:
        case Action():
            pass
        case Seq(first=first, rest=rest):
            _number_branches(first, path + (0,), table)
            _number_branches(rest, path + (1,), table)
        case If(body=body) | While(body=body):
            table[path] = len(table)
            _number_branches(body, path + (0,), table)
        case IfElse(then_body=then_body, else_body=else_body):
            table[path] = len(table)
            _number_branches(then_body, path + (0,), table)
            _number_branches(else_body, path + (1,), table)
        case Repeat(body=body):
            _number_branches(body, path + (0,), table)


def branch_arms(program: KarelProgram) -> frozenset[BranchArm]:
    """All (branch id, arm) pairs the program can record."""
    table: dict[Path, int] = {}
    _number_branches(program.body, (), table)
    arms = set()
    for path, branch_id in table.items():
        node = _node_at(program.body, path)
        if isinstance(node, While):
            arms.add((branch_id, "enter"))
            arms.add((branch_id, "skip"))
        else:
            arms.add((branch_id, "then"))
            arms.add((branch_id, "else"))
    return frozenset(arms)


def _node_at(stmt: Stmt, path: Path) -> Stmt:
    for step in path:
        match stmt:
            case Seq(first=first, rest=rest):
                stmt = first if step == 0 else rest
            case If(body=body) | While(body=body) | Repeat(body=body):
                stmt = body
            case IfElse(then_body=then_body, else_body=else_body):
                stmt = then_body if step == 0 else else_body
            case _:
                raise ValueError(f"bad path {path}")
    return stmt


class _Run:
    def __init__(self, grid: KarelGrid, numbering: dict[Path, int], step_limit: int):
        self.width = grid.width
        self.height = grid.height
        self.walls = grid.walls
        self.markers = dict(grid.markers)
        self.pos = grid.karel_pos
        self.direction = grid.karel_dir
        self.numbering = numbering
        self.step_limit = step_limit
        self.steps = 0
        self.taken: set[BranchArm] = set()

    def exec(self, stmt: Stmt, path: Path) -> None:
        match stmt:
            case Action(name=name):
                if self.steps >= self.step_limit:
                    raise _Crash(CrashReason.STEP_LIMIT)
                self.act(name)
                self.steps += 1
            case Seq(first=first, rest=rest):
                self.exec(first, path + (0,))
                self.exec(rest, path + (1,))
            case If(cond=cond, body=body):
                branch = self.numbering[path]
                if self.eval_cond(cond):
                    self.taken.add((branch, "then"))
                    self.exec(body, path + (0,))
                else:
                    self.taken.add((branch, "else"))
            case IfElse(cond=cond, then_body=then_body, else_body=else_body):
                branch = self.numbering[path]
                if self.eval_cond(cond):
                    self.taken.add((branch, "then"))
                    self.exec(then_body, path + (0,))
                else:
                    self.taken.add((branch, "else"))
                    self.exec(else_body, path + (1,))
            case While(cond=cond, body=body):
                branch = self.numbering[path]
                while True:
                    if not self.eval_cond(cond):
                        self.taken.add((branch, "skip"))
                        break
                    self.taken.add((branch, "enter"))
                    steps_before = self.steps
                    self.exec(body, path + (0,))
                    if self.steps == steps_before:
                        # No action ran, so nothing observable changed and
                        # the condition will stay true forever.
                        raise _Crash(CrashReason.STEP_LIMIT)
            case Repeat(times=times, body=body):
                for _ in range(times):
                    self.exec(body, path + (0,))
            case _:
                raise TypeError(f"not a statement: {stmt!r}")

    def act(self, name: str) -> None:
        if name == "move":
            di, dj = DIR_DELTA[self.direction]
            target = (self.pos[0] + di, self.pos[1] + dj)
            if not self.in_bounds(target) or target in self.walls:
                raise _Crash(CrashReason.MOVE_INTO_WALL)
            self.pos = target
        elif name == "turnLeft":
            self.direction = LEFT_OF[self.direction]
        elif name == "turnRight":
            self.direction = RIGHT_OF[self.direction]
        elif name == "pickMarker":
            have = self.markers.get(self.pos, 0)
            if have == 0:
                raise _Crash(CrashReason.PICK_EMPTY)
            if have == 1:
                del self.markers[self.pos]
            else:
                self.markers[self.pos] = have - 1
        elif name == "putMarker":
            have = self.markers.get(self.pos, 0)
            if have >= MAX_MARKERS:
                raise _Crash(CrashReason.PUT_OVERFLOW)
            self.markers[self.pos] = have + 1
        else:
            raise ValueError(f"unknown action {name!r}")

    def eval_cond(self, cond: Cond) -> bool:
        match cond:
            case Pred(name="markersPresent"):
                return self.markers.get(self.pos, 0) > 0
            case Pred(name="frontIsClear"):
                return self.clear_toward(self.direction)
            case Pred(name="leftIsClear"):
                return self.clear_toward(LEFT_OF[self.direction])
            case Pred(name="rightIsClear"):
                return self.clear_toward(RIGHT_OF[self.direction])
            case Not(cond=inner):
                return not self.eval_cond(inner)
        raise TypeError(f"not a condition: {cond!r}")

    def clear_toward(self, direction: str) -> bool:
        di, dj = DIR_DELTA[direction]
        target = (self.pos[0] + di, self.pos[1] + dj)
        return self.in_bounds(target) and target not in self.walls

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        i, j = cell
        return 0 <= i < self.width and 0 <= j < self.height


def execute(
    program: KarelProgram, grid: KarelGrid, step_limit: int = DEFAULT_STEP_LIMIT
) -> ExecResult:
    """Run the program on the grid. Never raises for in-world failures."""
    if step_limit < 0:
        raise ValueError("step_limit must be >= 0")
    numbering: dict[Path, int] = {}
    _number_branches(program.body, (), numbering)
    run = _Run(grid, numbering, step_limit)
    try:
        run.exec(program.body, ())
    except _Crash as crash:
        return ExecResult(
            output=None,
            crash=crash.reason,
            branches_taken=frozenset(run.taken),
            steps=run.steps,
        )
    output = KarelGrid(
        width=run.width,
        height=run.height,
        walls=run.walls,
        markers=run.markers,
        karel_pos=run.pos,
        karel_dir=run.direction,
    )
    return ExecResult(
        output=output, crash=None, branches_taken=frozenset(run.taken), steps=run.steps
    )
