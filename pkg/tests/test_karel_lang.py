import random

import pytest

from homogen.karel import (
    Action,
    If,
    IfElse,
    KarelProgram,
    KarelSyntaxError,
    Not,
    Pred,
    Repeat,
    Seq,
    While,
    emit_tokens,
    parse_program,
    program_salients,
    program_to_text,
    sample_program,
)


def test_parse_minimal_program():
    assert parse_program("def main(): move()") == KarelProgram(Action("move"))


def test_parse_while_with_unbraced_body():
    program = parse_program("def main(): while(frontIsClear()): move()")
    assert program == KarelProgram(While(Pred("frontIsClear"), Action("move")))


def test_parse_sequences_nest_right():
    program = parse_program("def main(): move() ; turnLeft() ; putMarker()")
    assert program == KarelProgram(
        Seq(Action("move"), Seq(Action("turnLeft"), Action("putMarker")))
    )


def test_parse_if_else_and_not():
    text = "def main(): if(not(markersPresent())): putMarker() else: pickMarker()"
    program = parse_program(text)
    assert program == KarelProgram(
        IfElse(Not(Pred("markersPresent")), Action("putMarker"), Action("pickMarker"))
    )


def test_dangling_else_binds_to_the_inner_if():
    text = "def main(): if(leftIsClear()): if(rightIsClear()): move() else: turnLeft()"
    program = parse_program(text)
    assert program == KarelProgram(
        If(Pred("leftIsClear"), IfElse(Pred("rightIsClear"), Action("move"), Action("turnLeft")))
    )


def test_braces_delimit_the_else_owner():
    text = "def main(): if(leftIsClear()): { if(rightIsClear()): move() } else: turnLeft()"
    program = parse_program(text)
    assert program == KarelProgram(
        IfElse(Pred("leftIsClear"), If(Pred("rightIsClear"), Action("move")), Action("turnLeft"))
    )


def test_repeat_count_bounds():
    program = parse_program("def main(): repeat(19): move()")
    assert program == KarelProgram(Repeat(19, Action("move")))
    with pytest.raises(KarelSyntaxError):
        parse_program("def main(): repeat(20): move()")
    with pytest.raises(ValueError):
        Repeat(20, Action("move"))


def test_parse_accepts_token_sequences():
    tokens = ["def", "main", "(", ")", ":", "move", "(", ")"]
    assert parse_program(tokens) == KarelProgram(Action("move"))


def test_syntax_errors_carry_positions():
    with pytest.raises(KarelSyntaxError) as excinfo:
        parse_program("def main(): move(")
    assert excinfo.value.position == len("def main(): move(")
    with pytest.raises(KarelSyntaxError):
        parse_program("def main(): fly()")
    with pytest.raises(KarelSyntaxError):
        parse_program("def main(): move() extra()")
    with pytest.raises(KarelSyntaxError):
        parse_program("def main(): while(markersPresent): move()")
    with pytest.raises(KarelSyntaxError):
        parse_program("def main(): move() @")
    with pytest.raises(KarelSyntaxError):
        parse_program("")


def test_emit_minimal_program_tokens():
    tokens = emit_tokens(KarelProgram(Action("move")))
    assert tokens == ["def", "main", "(", ")", ":", "move", "(", ")"]


def test_emit_orders_sequences_and_braces_bodies():
    program = KarelProgram(
        Seq(Action("move"), While(Pred("frontIsClear"), Action("turnLeft")))
    )
    assert program_to_text(program) == (
        "def main ( ) : move ( ) ; while ( frontIsClear ( ) ) : { turnLeft ( ) }"
    )


def test_emit_flattens_left_nested_sequences():
    left = KarelProgram(Seq(Seq(Action("move"), Action("turnLeft")), Action("putMarker")))
    right = KarelProgram(Seq(Action("move"), Seq(Action("turnLeft"), Action("putMarker"))))
    assert emit_tokens(left) == emit_tokens(right)
    # The parser rebuilds the right-nested form.
    assert parse_program(emit_tokens(left)) == right


def test_round_trip_on_sampled_programs():
    rng = random.Random(31)
    for _ in range(2000):
        program = sample_program(rng)
        assert parse_program(emit_tokens(program)) == program


def test_round_trip_through_text():
    rng = random.Random(32)
    for _ in range(300):
        program = sample_program(rng)
        assert parse_program(program_to_text(program)) == program


def test_program_salients_examples():
    assert program_salients(KarelProgram(Action("move"))) == {
        "size": 8,
        "control_flow_count": 0,
        "nesting_depth": 0,
    }
    nested = KarelProgram(
        While(Pred("frontIsClear"), If(Pred("markersPresent"), Action("move")))
    )
    assert program_salients(nested)["control_flow_count"] == 2
    assert program_salients(nested)["nesting_depth"] == 2
    siblings = KarelProgram(
        Seq(
            While(Pred("frontIsClear"), Action("move")),
            If(Pred("markersPresent"), Action("pickMarker")),
        )
    )
    assert program_salients(siblings)["control_flow_count"] == 2
    assert program_salients(siblings)["nesting_depth"] == 1


def test_size_counts_every_token():
    rng = random.Random(33)
    for _ in range(200):
        program = sample_program(rng)
        assert program_salients(program)["size"] == len(emit_tokens(program))


def test_ast_validation():
    with pytest.raises(ValueError):
        Action("jump")
    with pytest.raises(ValueError):
        Pred("isHome")
