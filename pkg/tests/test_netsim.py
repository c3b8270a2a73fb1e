import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import topologies
from ztdn import netsim
from ztdn.core_model import AttackEvent, AttackKind, AttackSurface, Reason, Verdict
from ztdn.scenario import ScenarioError, load_scenario, parse_scenario, validate_scenario

BASE = """
seed: 1
reauth_period: {reauth}
latency: {{pep_to_pdp: {hop}, pdp_check: 0, pdp_to_pep: {hop}}}
networks:
  - {{id: net1, trust_threshold: 0.7, segments: [a], peps: [pep1{extra_pep}]{net_opts}}}
  - {{id: net2, trust_threshold: 0.7, segments: [b], peps: [pep2]}}
users:
  - {{id: alice, role: Administrator, trust: {{net1: 0.8, net2: 0.8}}}}
  - {{id: bob, role: NormalUser, trust: {{net1: 0.8, net2: 0.8}}}}
resources:
  - {{id: ra, segment: a, network: net1}}
  - {{id: rb, segment: b, network: net2}}
policies:
  - {{id: pa, network: net1, scope: [a]}}
  - {{id: pb, network: net2, scope: [b]}}
schedule:
{schedule}
"""


def scenario(schedule: str, reauth=0, hop=0, extra_pep="", net_opts="", horizon=None):
    text = BASE.format(reauth=reauth, hop=hop, extra_pep=extra_pep, net_opts=net_opts, schedule=schedule or "  []")
    if not schedule:
        text = text.replace("schedule:\n  []", "schedule: []")
    if horizon is not None:
        text += f"horizon: {horizon}\n"
    return parse_scenario(text)


def req(t, user="alice", net="net1", res="ra"):
    return f"  - {{at: {t}, type: request, user: {user}, network: {net}, resource: {res}}}"


def decisions(report, net=None):
    return [(e.verdict, e.reason, e.decided_at) for e in report.access_log if net is None or e.network_id == net]


# Figure-2 style outcome


def test_fig2_outcome(fig2_path):
    report = netsim.run(load_scenario(str(fig2_path)))
    assert report.verdict_summary() == "net1 Grant, net2 Deny, net3 Deny"
    reasons = [e.reason for e in report.access_log]
    assert reasons == [Reason.OK, Reason.TRUST_BELOW_THRESHOLD, Reason.TRUST_BELOW_THRESHOLD]
    for n in report.network_ids:
        assert netsim.kpis(report, n).response_time.mean == 2.0


def test_empty_schedule():
    report = netsim.run(scenario(""))
    for n in report.network_ids:
        k = netsim.kpis(report, n)
        assert k.availability == 1.0
        assert (k.offered_requests, k.served_requests, k.breach_attempts, k.unauthorized_attempts) == (0, 0, 0, 0)
        assert k.response_time.count == 0
    assert report.containment_matrix == [[False, False], [False, False]]


def test_deterministic_reports(fig2_path):
    a = netsim.run(load_scenario(str(fig2_path))).to_json()
    b = netsim.run(load_scenario(str(fig2_path))).to_json()
    assert a == b
    json.loads(a)


def test_unknown_network_kpis(fig2_path):
    report = netsim.run(load_scenario(str(fig2_path)))
    with pytest.raises(KeyError):
        netsim.kpis(report, "net9")


# attacks


def test_tamper_then_request_is_denied():
    sc = scenario(req(6))
    sc = netsim.inject(sc, AttackEvent(AttackSurface.AS1_POLICY_ENGINE, AttackKind.POLICY_TAMPER, 5, "pa"))
    report = netsim.run(sc)
    assert decisions(report, "net1") == [(Verdict.DENY, Reason.POLICY_TAMPERED, 6)]


def test_data_manipulation_breaks_chain():
    sc = netsim.inject(scenario(req(3)), AttackEvent(AttackSurface.AS1_POLICY_ENGINE, AttackKind.DATA_MANIPULATION, 2, "pa"))
    report, sim = netsim.simulate(sc)
    assert decisions(report, "net1")[0][1] is Reason.POLICY_TAMPERED
    assert sim.stores["net1"].log.broken_links()


def test_ddos_flood_overloads_pep():
    sc = scenario(req(4), net_opts=", pep_capacity: 10, ddos_cooldown: 3")
    sc = netsim.inject(sc, AttackEvent(AttackSurface.AS2_PEP, AttackKind.DDOS_FLOOD, 4, "pep1"), rate=100, duration=1)
    report, sim = netsim.simulate(sc)
    k = netsim.kpis(report, "net1")
    # flood arrives before the legitimate request: 10 pass, the 11th takes the PEP down
    assert sim.peps["pep1"].transitions[0] == (4, sim.peps["pep1"].status.DOWN)
    assert k.offered_requests == 101
    assert k.served_requests == 10
    assert k.availability < 1
    assert k.breach_attempts == 100
    assert decisions(report, "net2") == []


def test_credential_compromise():
    sc = netsim.inject(
        scenario(req(3)),
        AttackEvent(AttackSurface.AS3_INSIDER, AttackKind.CREDENTIAL_COMPROMISE, 2, "alice"),
        network="net1",
    )
    report = netsim.run(sc)
    assert decisions(report, "net1") == [(Verdict.DENY, Reason.CREDENTIAL_INVALID, 3)]
    assert netsim.kpis(report, "net1").breach_attempts == 1


def test_insider_access_is_clamped():
    sc = netsim.inject(
        scenario(""),
        AttackEvent(AttackSurface.AS3_INSIDER, AttackKind.INSIDER_ACCESS, 2, "alice"),
        network="net1",
        resource="ra",
    )
    report = netsim.run(sc)
    assert decisions(report, "net1") == [(Verdict.DENY, Reason.TRUST_BELOW_THRESHOLD, 2)]
    assert netsim.kpis(report, "net1").breach_attempts == 1


def test_component_failure_fail_and_recover():
    sched = "\n".join(req(t) for t in range(6))
    sc = netsim.inject(scenario(sched), AttackEvent(AttackSurface.AS2_PEP, AttackKind.COMPONENT_FAILURE, 2, "pep1"), duration=2)
    k = netsim.kpis(netsim.run(sc), "net1")
    # ticks 2 and 3 are down
    assert (k.offered_requests, k.served_requests) == (6, 4)


def test_inject_unknown_target():
    with pytest.raises(ScenarioError, match="unknown policy"):
        netsim.inject(scenario(""), AttackEvent(AttackSurface.AS1_POLICY_ENGINE, AttackKind.POLICY_TAMPER, 1, "nope"))


def test_inject_is_stable_and_pure():
    sc = scenario(req(1) + "\n" + req(5))
    attack = AttackEvent(AttackSurface.AS1_POLICY_ENGINE, AttackKind.POLICY_TAMPER, 5, "pa")
    out = netsim.inject(sc, attack)
    assert len(sc.schedule) == 2
    assert [e.at for e in out.schedule] == [1, 5, 5]
    assert out.schedule[2].event == attack


# PEP availability and failover


def test_availability_21_of_31():
    sched = "\n".join(
        [req(t) for t in range(10)]
        + ["  - {at: 10, type: fail, pep: pep1}"]
        + [req(t) for t in range(10, 20)]
        + ["  - {at: 20, type: recover, pep: pep1}"]
        + [req(t) for t in range(20, 31)]
    )
    k = netsim.kpis(netsim.run(scenario(sched)), "net1")
    offered = 31
    down_ticks = len(range(10, 20))
    assert (k.offered_requests, k.served_requests) == (offered, offered - down_ticks)
    assert k.availability == 21 / 31


def test_backup_pep_serves_everything():
    sched = "\n".join(["  - {at: 0, type: fail, pep: pep1}"] + [req(t) for t in range(5)])
    k = netsim.kpis(netsim.run(scenario(sched, extra_pep=", pep1b", net_opts=", backup: true")), "net1")
    assert k.served_requests == k.offered_requests == 5
    assert k.failover_forwards == 5
    k = netsim.kpis(netsim.run(scenario(sched, extra_pep=", pep1b")), "net1")
    assert k.served_requests == 0


# KPI timing


def test_zero_latency_response_time():
    k = netsim.kpis(netsim.run(scenario(req(3))), "net1")
    assert k.response_time.count == 1 and k.response_time.max == 0.0


def test_ten_requests_hop_cost_one():
    k = netsim.kpis(netsim.run(scenario("\n".join(req(t) for t in range(10)), hop=1)), "net1")
    # PEP->PDP 1 + check 0 + PDP->PEP 1
    assert k.response_time.count == 10
    assert k.response_time.mean == 1 + 0 + 1
    assert k.policy_check_time.mean == 0.0


def test_unauthorized_attempts_counted():
    sched = "\n".join(
        [req(1)]
        + [f"  - {{at: {t}, type: use, user: bob, network: net1, resource: ra}}" for t in (2, 3, 4)]
        + ["  - {at: 5, type: use, user: alice, network: net1, resource: ra}"]
    )
    k = netsim.kpis(netsim.run(scenario(sched)), "net1")
    assert k.unauthorized_attempts == 3


# re-authentication


def first_reauth_at_or_after(grant: int, period: int, t: int) -> int:
    return grant + period * max(1, math.ceil((t - grant) / period))


@pytest.mark.parametrize("tamper_at", [4, 5, 6, 7])
def test_revocation_tick_after_tamper(tamper_at):
    sc = scenario(req(1), reauth=3, horizon=30)
    sc = netsim.inject(sc, AttackEvent(AttackSurface.AS1_POLICY_ENGINE, AttackKind.POLICY_TAMPER, tamper_at, "pa"))
    report = netsim.run(sc)
    revokes = [d for d in decisions(report, "net1") if d[0] is Verdict.REVOKE]
    assert revokes == [(Verdict.REVOKE, Reason.POLICY_TAMPERED, first_reauth_at_or_after(1, 3, tamper_at))]


def test_revocation_closes_channel():
    sched = req(1) + "\n  - {at: 2, type: use, user: alice, network: net1, resource: ra}" + \
        "\n  - {at: 5, type: trust_event, user: alice, network: net1, kind: BreachAttempt}" + \
        "\n  - {at: 8, type: use, user: alice, network: net1, resource: ra}"
    report = netsim.run(scenario(sched, reauth=3, horizon=10))
    revokes = [d for d in decisions(report, "net1") if d[0] is Verdict.REVOKE]
    assert revokes == [(Verdict.REVOKE, Reason.TRUST_BELOW_THRESHOLD, 7)]
    assert netsim.kpis(report, "net1").unauthorized_attempts == 1


@given(st.integers(1, 5), st.integers(0, 6), st.integers(0, 25))
def test_reauth_liveness(period, grant_at, extra):
    horizon = grant_at + extra
    report = netsim.run(scenario(req(grant_at), reauth=period, horizon=horizon))
    ticks = [e.decided_at for e in report.access_log if e.network_id == "net1"]
    assert ticks == list(range(grant_at, horizon + 1, period))


# invariants over random topologies


@settings(max_examples=60)
@given(topologies())
def test_grant_precedes_open(config):
    report = netsim.run(config, with_containment=False)
    granted = set()
    for ev in report.timeline:
        if ev["event"] in ("decision", "reauth") and ev["verdict"] == "Grant":
            granted.add(ev["request_id"])
        if ev["event"] == "enforce" and ev["command"] == "Open":
            assert ev["request_id"] in granted


@settings(max_examples=40)
@given(topologies())
def test_run_is_deterministic(config):
    assert netsim.run(config).to_json() == netsim.run(config).to_json()


@settings(max_examples=60)
@given(topologies())
def test_counters_conserve(config):
    report, sim = netsim.simulate(config, with_containment=False)
    for n in report.network_ids:
        k = netsim.kpis(report, n)
        assert 0 <= k.served_requests <= k.offered_requests
        assert 0.0 <= k.availability <= 1.0
    for pep in sim.peps.values():
        assert pep.open_channels <= pep.opened_ever
    assert sum(netsim.kpis(report, n).activity_log_len for n in report.network_ids) == len(report.access_log)


# containment


def test_containment_disjoint():
    sc = netsim.inject(scenario(req(3) + "\n" + req(3, net="net2", res="rb")),
                       AttackEvent(AttackSurface.AS1_POLICY_ENGINE, AttackKind.POLICY_TAMPER, 2, "pa"))
    assert netsim.containment(netsim.run(sc)) == [[True, False], [False, False]]


def test_containment_shared_tamper():
    text = BASE.format(reauth=0, hop=0, extra_pep="", net_opts="", schedule=req(3, net="net2", res="dc"))
    text = text.replace("segments: [a]", "segments: [a, datacenter]")
    text = text.replace("  - {id: rb,", "  - {id: dc, segment: datacenter, network: net1, shared: true}\n  - {id: rb,")
    text = text.replace("  - {id: pb,", "  - {id: pdc, network: net1, scope: [datacenter]}\n  - {id: pb,")
    sc = parse_scenario(text)
    assert netsim.run(sc).access_log[0].verdict is Verdict.GRANT
    sc = netsim.inject(sc, AttackEvent(AttackSurface.AS1_POLICY_ENGINE, AttackKind.POLICY_TAMPER, 2, "pdc"))
    matrix = netsim.containment(netsim.run(sc))
    assert matrix == [[True, True], [False, False]]


def test_no_attacks_no_containment_entries():
    matrix = netsim.containment(netsim.run(scenario(req(1) + "\n" + req(2, net="net2", res="rb"))))
    assert matrix == [[False, False], [False, False]]


@settings(max_examples=50)
@given(topologies())
def test_containment_soundness(config):
    matrix = netsim.run(validate_scenario(config)).containment_matrix
    for i, row in enumerate(matrix):
        for j, cell in enumerate(row):
            if i != j:
                assert not cell


def test_report_exports(fig2_path):
    report = netsim.run(load_scenario(str(fig2_path)))
    kpi_lines = report.kpi_csv().splitlines()
    assert kpi_lines[0].split(",") == list(netsim.KPI_HEADER)
    assert len(kpi_lines) == 4
    assert report.access_log_csv().splitlines()[0] == "request_id,user_id,network_id,verdict,reason,decided_at"
