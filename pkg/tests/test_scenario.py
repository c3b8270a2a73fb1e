import pytest
from hypothesis import given

from strategies import topologies
from ztdn._yaml import ParseError
from ztdn.scenario import (
    ScenarioError,
    load_scenario,
    parse_scenario,
    serialize_scenario,
    validate_scenario,
)


def test_empty_scenario_needs_a_network():
    with pytest.raises(ScenarioError, match="at least one network required"):
        validate_scenario(parse_scenario(""))


def test_threshold_out_of_range():
    text = "networks:\n  - {id: net1, trust_threshold: 1.3, peps: [p1]}\n"
    with pytest.raises(ScenarioError, match=r"threshold out of \[0,1\]") as exc:
        validate_scenario(parse_scenario(text))
    assert exc.value.errors[0].startswith("line 2:")


def test_fig2_validates(fig2_path):
    v = validate_scenario(load_scenario(str(fig2_path)))
    assert len(v.networks) == 3
    assert [r for r in v.resources.values() if r.shared] == [v.resources["shared-db"]]
    assert {u.user_id for u in v.config.users} == {"user"}


def test_parse_errors_carry_lines():
    text = """networks:
  - {id: net1, trust_threshold: 0.5, peps: [p1], segments: [s]}
users:
  - {id: u, role: Guest}
schedule:
  - {at: 1, type: teleport}
"""
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(text)
    joined = "\n".join(exc.value.errors)
    assert "line 4:" in joined and "role" in joined
    assert "line 6:" in joined and "teleport" in joined


def test_yaml_syntax_error_line():
    with pytest.raises(ParseError) as exc:
        parse_scenario("networks:\n  - {id: net1\n")
    assert exc.value.errors[0].startswith("line ")


def test_duplicate_key_rejected():
    with pytest.raises(ParseError, match="line 2: duplicate key"):
        parse_scenario("seed: 1\nseed: 2\n")


def test_unknown_references_all_reported():
    text = """networks:
  - {id: net1, trust_threshold: 0.5, peps: [p1], segments: [s]}
  - {id: net1, trust_threshold: 0.5, peps: [p2], segments: [t]}
resources:
  - {id: r, segment: nowhere, network: net1}
schedule:
  - {at: 1, type: request, user: ghost, network: net1, resource: r}
"""
    with pytest.raises(ScenarioError) as exc:
        validate_scenario(parse_scenario(text))
    joined = "\n".join(exc.value.errors)
    assert "duplicate network id" in joined
    assert "segment 'nowhere'" in joined
    assert "unknown user 'ghost'" in joined


def test_unknown_field_rejected():
    with pytest.raises(ScenarioError, match="unknown field"):
        parse_scenario("networks:\n  - {id: n, trust_threshold: 0.5, peps: [p], colour: red}\n")


def test_fig2_round_trip(fig2_path):
    config = validate_scenario(load_scenario(str(fig2_path))).config
    assert parse_scenario(serialize_scenario(config)) == config


@given(topologies())
def test_round_trip(config):
    validated = validate_scenario(config).config
    text = serialize_scenario(validated)
    again = parse_scenario(text)
    assert again == validated
    assert serialize_scenario(again) == text
