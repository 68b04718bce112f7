import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vanetsim.config import SimConfig
from vanetsim.geometry import build_cross_network
from vanetsim.mobility import VehicleState
from vanetsim.protocol import (FleetView, ObuState, ReportPayload, RsuState, SignalPhase,
                               TcuState, WarningPayload, approach_queue, classify_blind,
                               expire_warning, initial_tcu, obu_receive, obu_tick, rsu_sense,
                               rsu_tick, tcu_tick)
from vanetsim.radio import Packet

CFG = SimConfig()
NET = build_cross_network(CFG)
COR = NET.corridors["N"]
RSU = RsuState(200, "N", NET.intersection.rsu_positions["N"])


def vehicle(s=300.0, v=10.0, approach="N", vid=0):
    return VehicleState(vid, approach, s, v, max(v, 5.0), CFG.vehicle_length)


def warning(blocked=True, approach="N", issued=10.0, seq=1):
    payload = WarningPayload("I0", blocked, approach, issued, issued + CFG.warning_expiry)
    return Packet(seq, "warning", CFG.warning_packet_bytes, 200, issued, payload)


def fleet_of(*vehicles):
    return FleetView.from_vehicles(vehicles, NET)


# -- OBU -----------------------------------------------------------------------

def test_first_beacon_after_jitter():
    obu = ObuState(0, next_beacon_at=0.23)
    seqs = itertools.count()
    obu, pkt = obu_tick(obu, vehicle(), 0.1, CFG, seqs, NET)
    assert pkt is None
    obu, pkt = obu_tick(obu, vehicle(), 0.2, CFG, seqs, NET)
    assert pkt.kind == "beacon" and pkt.size == 512 and pkt.created_at == 0.23
    assert pkt.payload.position == COR.point(300.0) and pkt.payload.speed == 10.0
    assert obu.next_beacon_at == pytest.approx(0.73)
    assert obu_tick(obu, vehicle(), 0.3, CFG, seqs, NET)[1] is None


@pytest.mark.parametrize("jitter", [0.0, 0.23, 0.4999])
def test_beacon_count_over_full_run(jitter):
    # floor((300 - jitter) / 0.5) + 1 due instants, less one landing exactly on 300 s
    obu = ObuState(0, jitter)
    seqs = itertools.count()
    sent = []
    for k in range(3000):
        obu, pkt = obu_tick(obu, vehicle(), k * CFG.mobility_dt, CFG, seqs, NET)
        if pkt is not None:
            sent.append(pkt.created_at)
    assert abs(len(sent) - (int((300.0 - jitter) // 0.5) + 1)) <= 1
    assert len(sent) == 600 and sent[-1] < 300.0
    assert all(b - a == pytest.approx(0.5) for a, b in zip(sent, sent[1:]))


def test_exited_vehicle_stays_silent():
    gone = vehicle()
    gone.mode = "exited"
    assert obu_tick(ObuState(0, 0.0), gone, 0.0, CFG, itertools.count(), NET)[1] is None


def test_fresh_warning_activates():
    veh, obu = obu_receive(vehicle(), ObuState(0, 0.0), warning(), 10.001)
    assert veh.warning_active and veh.warning_received_at == 10.001
    assert veh.warning_expiry == 11.0 and obu.rx_count == 1


def test_expired_warning_only_counts():
    veh, obu = obu_receive(vehicle(), ObuState(0, 0.0), warning(), 11.0)
    assert not veh.warning_active and obu.rx_count == 1


def test_clear_after_blocked():
    veh, obu = obu_receive(vehicle(), ObuState(0, 0.0), warning(), 10.001)
    veh, obu = obu_receive(veh, obu, warning(blocked=False, issued=10.5, seq=2), 10.501)
    assert not veh.warning_active and veh.warning_received_at is None and obu.rx_count == 2


def test_other_approach_ignored():
    veh, _ = obu_receive(vehicle(approach="E"), ObuState(0, 0.0), warning(), 10.001)
    assert not veh.warning_active


def test_baseline_never_warns():
    veh, obu = obu_receive(vehicle(), ObuState(0, 0.0), warning(), 10.001, mode="baseline")
    assert not veh.warning_active and obu.rx_count == 1


def test_beacon_updates_neighbor_table():
    beacon = Packet(3, "beacon", 512, 7, 1.0)
    _, obu = obu_receive(vehicle(), ObuState(0, 0.0), beacon, 1.001)
    _, obu = obu_receive(vehicle(), obu, beacon, 1.501)
    assert obu.neighbors == ((7, 1.501),) and obu.rx_count == 2


@given(st.floats(10.0, 10.99))
def test_warning_idempotent(t):
    once, o1 = obu_receive(vehicle(), ObuState(0, 0.0), warning(), t)
    twice, o2 = obu_receive(once, o1, warning(), t)
    assert once == twice and o2.rx_count == o1.rx_count + 1


def test_warning_expires_on_tick():
    veh, _ = obu_receive(vehicle(), ObuState(0, 0.0), warning(), 10.001)
    assert expire_warning(veh, 10.9).warning_active
    assert not expire_warning(veh, 11.0).warning_active


# -- RSU sensing ---------------------------------------------------------------

def test_nothing_in_range():
    new = rsu_sense(RSU, fleet_of(vehicle(s=100.0)), NET, CFG, 5.0)
    assert not new.blocked and new.detected == frozenset()


def test_detection_respects_sensor_range():
    near, far = vehicle(s=COR.stop_s - 74.0, vid=1), vehicle(s=COR.stop_s - 76.0, vid=2)
    new = rsu_sense(RSU, fleet_of(near, far), NET, CFG, 5.0)
    assert new.detected == frozenset({1})


def test_stopped_vehicle_straddling_box_edge():
    stuck = vehicle(s=COR.box_start_s + 1.0, v=0.0, approach="E")
    new = rsu_sense(RSU, fleet_of(stuck), NET, CFG, 5.0)
    assert new.blocked and new.box_blocked_since == 5.0


def test_slow_but_moving_vehicle_in_box_is_not_blockage():
    new = rsu_sense(RSU, fleet_of(vehicle(s=400.0, v=0.6)), NET, CFG, 5.0)
    assert not new.blocked


@pytest.mark.parametrize("free,blocked", [(5.0, True), (6.4, True), (6.5, False), (7.0, False)])
def test_exit_lane_free_space(free, blocked):
    # queue tail rear bumper ``free`` metres past the box
    tail = vehicle(s=COR.box_end_s + free + CFG.vehicle_length, v=0.0, vid=3)
    assert rsu_sense(RSU, fleet_of(tail), NET, CFG, 5.0).blocked is blocked


def test_vehicles_heading_for_queue_claim_room():
    tail = vehicle(s=COR.box_end_s + 20.0 + CFG.vehicle_length, v=0.0, vid=3)
    assert not rsu_sense(RSU, fleet_of(tail), NET, CFG, 5.0).blocked
    # two movers past the stop line leave 20 - 2 * 6.5 = 7 m: still room
    movers = [vehicle(s=COR.box_start_s + 10.0 * i, v=8.0, vid=4 + i) for i in range(2)]
    assert not rsu_sense(RSU, fleet_of(tail, *movers), NET, CFG, 5.0).blocked
    # a third leaves 0.5 m
    movers.append(vehicle(s=COR.stop_s + 0.5, v=8.0, vid=9))
    assert rsu_sense(RSU, fleet_of(tail, *movers), NET, CFG, 5.0).blocked


def test_other_approach_queue_ignored():
    tail = vehicle(s=COR.box_end_s + 1.0 + CFG.vehicle_length, v=0.0, approach="S", vid=3)
    assert not rsu_sense(RSU, fleet_of(tail), NET, CFG, 5.0).blocked


def test_sensed_obstruction_is_not_a_detected_node():
    view = FleetView(np.array([-1]), np.array(["N"]), np.array([COR.box_end_s + 7.0]),
                     np.array([0.0]), np.array([4.5]), np.array([COR.point(430.0).x]),
                     np.array([COR.point(430.0).y]))
    new = rsu_sense(RSU, view, NET, CFG, 5.0)
    assert new.blocked and new.detected == frozenset()


def test_clearing_sets_clear_pending():
    rsu = rsu_sense(RSU, fleet_of(), NET, CFG, 5.0, forced=True)
    rsu = rsu_sense(rsu, fleet_of(), NET, CFG, 5.1)
    assert rsu.box_blocked_since is None and rsu.clear_pending


def test_approach_queue_counts_detected_waiting_vehicles():
    cars = [vehicle(s=COR.stop_s - 10.0 * i, v=0.0, vid=i) for i in range(4)]
    cars.append(vehicle(s=COR.stop_s - 5.0, approach="E", vid=9))
    view = fleet_of(*cars)
    rsu = rsu_sense(RSU, view, NET, CFG, 1.0)
    assert approach_queue(rsu, view, NET) == 4


# -- RSU emissions -------------------------------------------------------------

def drive_rsu(pattern, cfg=CFG, offset=0.0):
    """Run rsu_sense/rsu_tick over a per-tick forced-blockage pattern."""
    rsu = RsuState(200, "N", RSU.position, tx_offset=offset)
    seqs = itertools.count()
    warnings, reports = [], []
    for k, forced in enumerate(pattern):
        t = k * cfg.mobility_dt
        rsu = rsu_sense(rsu, fleet_of(), NET, cfg, t, forced=forced)
        rsu, w, r = rsu_tick(rsu, t, cfg, seqs)
        warnings += [(k, p) for p in w]
        if r is not None:
            reports.append(r)
    return warnings, reports


def test_two_second_blockage_gives_eleven_warnings():
    # blocked over ticks 0..20 (0.0 s to 2.0 s): instants 1.0, 1.1, ..., 2.0
    warnings, _ = drive_rsu([True] * 21 + [False] * 5)
    blocked = [p for _, p in warnings if p.payload.blocked]
    assert len(blocked) == 11
    assert [p.payload.blocked for _, p in warnings].count(False) == 1
    assert all(p.size == 256 and p.kind == "warning" for _, p in warnings)


def test_never_blocked_only_reports():
    warnings, reports = drive_rsu([False] * 35)
    assert warnings == []
    assert [r.created_at for r in reports] == pytest.approx([1.0, 2.0, 3.0])
    assert all(isinstance(r.payload, ReportPayload) for r in reports)


def test_warnings_carry_the_rsu_offset():
    warnings, _ = drive_rsu([True] * 12, offset=0.037)
    (_, first) = warnings[0]
    assert first.created_at == pytest.approx(1.037)
    assert first.payload.issued_at == first.created_at
    assert first.payload.expiry == pytest.approx(2.037)


def test_baseline_rsu_stays_silent():
    warnings, reports = drive_rsu([True] * 25 + [False] * 10, cfg=CFG.replace(mode="baseline"))
    assert warnings == [] and len(reports) == 3


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.integers(1, 30)), min_size=1, max_size=10),
       st.sampled_from([1, 2, 3, 5]))
def test_episode_bracketing(runs, repeat_ticks):
    cfg = CFG.replace(warning_repeat_period=repeat_ticks * CFG.mobility_dt)
    pattern = [flag for flag, n in runs for _ in range(n)] + [False]
    warnings, _ = drive_rsu(pattern, cfg)
    confirm = round(cfg.t_confirm / cfg.mobility_dt)
    k = 0
    expected = []
    while k < len(pattern):
        if not pattern[k]:
            k += 1
            continue
        end = k
        while pattern[end]:
            end += 1
        expected += [(j, True) for j in range(k + confirm, end, repeat_ticks)]
        expected.append((end, False))
        k = end
    assert [(j, p.payload.blocked) for j, p in warnings] == expected


# -- TCU -----------------------------------------------------------------------

def run_tcu(cfg, seconds, reports_at=None):
    tcu = initial_tcu(cfg)
    stages = [(0.0, tcu.phase.active, tcu.phase.stage)]
    for k in range(1, round(seconds / cfg.mobility_dt) + 1):
        t = k * cfg.mobility_dt
        inbox = reports_at(t) if reports_at else []
        tcu, signals = tcu_tick(tcu, t, inbox, cfg)
        assert not (signals["N"] == "green" and signals["E"] == "green")
        if (tcu.phase.active, tcu.phase.stage) != stages[-1][1:]:
            stages.append((round(t, 6), tcu.phase.active, tcu.phase.stage))
    return stages


def test_fixed_cycle():
    assert run_tcu(CFG, 70.0) == [
        (0.0, "NS_green", "green"), (30.0, "NS_green", "yellow"), (33.0, "NS_green", "all_red"),
        (35.0, "EW_green", "green"), (65.0, "EW_green", "yellow"), (68.0, "EW_green", "all_red"),
        (70.0, "NS_green", "green"),
    ]


def report(approach, count):
    return Packet(0, "report", 512, 200, 0.0, ReportPayload(approach, count))


def test_adaptive_extends_while_green_queue_dominates():
    cfg = CFG.replace(signal_mode="adaptive")
    tcu = TcuState(SignalPhase("NS_green", "green", 0.0, 30.0), mode="adaptive")
    tcu, _ = tcu_tick(tcu, 30.0, [report("N", 12), report("E", 3)], cfg)
    assert tcu.phase.stage == "green" and tcu.phase.stage_duration == 35.0
    tcu, _ = tcu_tick(tcu, 35.0, [report("N", 1)], cfg)
    assert tcu.phase.stage == "yellow"


def test_adaptive_extension_capped():
    cfg = CFG.replace(signal_mode="adaptive")
    tcu = TcuState(SignalPhase("NS_green", "green", 0.0, 60.0), mode="adaptive")
    tcu, _ = tcu_tick(tcu, 60.0, [report("N", 50)], cfg)
    assert tcu.phase.stage == "yellow"
    stages = run_tcu(cfg, 200.0, lambda t: [report("N", 40)])
    greens = [b[0] - a[0] for a, b in zip(stages, stages[1:]) if a[2] == "green"]
    assert max(greens) == pytest.approx(60.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=4, max_size=4))
def test_adaptive_never_double_green(counts):
    cfg = CFG.replace(signal_mode="adaptive")
    run_tcu(cfg, 150.0, lambda t: [report(d, c) for d, c in zip("NSEW", counts)])


# -- blind vehicles ------------------------------------------------------------

EPISODES = [("N", 10.0, 11.0, 20.0)]


def test_classify_blind():
    assert not classify_blind((1, "N", 12.0, True), EPISODES)
    assert classify_blind((1, "N", 12.0, False), EPISODES)
    assert classify_blind((1, "N", 10.5, False), EPISODES)
    assert not classify_blind((1, "S", 12.0, False), EPISODES)
    assert not classify_blind((1, "N", 20.0, False), EPISODES)
    assert not classify_blind((1, "N", 12.0, False), [])
    assert classify_blind((1, "N", 99.0, False), [("N", 10.0, 11.0, None)])
