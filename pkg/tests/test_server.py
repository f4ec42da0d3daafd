"""Guidance pipeline, wire protocol, and live TCP server behavior."""

import json
import socket
import time

import numpy as np
import pytest

from fidunav.geometry import (
    COIL,
    HEAD,
    Point3,
    RigidTransform,
    Rotation,
    WORLD,
)
from fidunav.server import (
    CommandError,
    GuidanceServer,
    GuidanceTracker,
    NUDGE_LIMIT_DEG,
    NUDGE_LIMIT_MM,
    PROTOCOL_VERSION,
    SteerCommand,
    run_pipeline,
    serve,
    state_record,
)
from fidunav.rig import assemble_frame
from fidunav.simulator import Occlusion, Scenario, simulate


def _scenario(rig, noise=0.0, n_frames=3, seed=0, occlusions=()):
    head = RigidTransform.make(Rotation.identity(), (0, 0, 0), HEAD, WORLD)
    coil = RigidTransform.make(Rotation.rot_x(35.0), (0, 60, 160), COIL, WORLD)
    return Scenario(
        rig=rig,
        head_trajectory=[(0, head)],
        coil_trajectory=[(0, coil)],
        noise_px=noise,
        occlusions=list(occlusions),
        n_frames=n_frames,
        seed=seed,
    )


class _WireClient:
    def __init__(self, address, timeout=5.0):
        self.sock = socket.create_connection(address, timeout=timeout)
        self.buf = b""

    def send(self, doc):
        self.sock.sendall(json.dumps(doc).encode() + b"\n")

    def send_raw(self, data: bytes):
        self.sock.sendall(data)

    def recv_record(self):
        while b"\n" not in self.buf:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("server closed connection")
            self.buf += chunk
        line, self.buf = self.buf.split(b"\n", 1)
        return json.loads(line)

    def recv_until(self, predicate, limit=200):
        for _ in range(limit):
            rec = self.recv_record()
            if predicate(rec):
                return rec
        raise AssertionError("no matching record within limit")

    def close(self):
        self.sock.close()


class TestSteerCommandParse:
    def test_set_goal(self):
        cmd = SteerCommand.parse('{"v": 1, "cmd": "set_goal", "p": [1, 2, 3]}')
        assert cmd.kind == "set_goal"
        assert cmd.payload == {"p": [1.0, 2.0, 3.0]}

    def test_nudge_defaults(self):
        cmd = SteerCommand.parse('{"v": 1, "cmd": "nudge_coil", "dt": [1, 0, 0]}')
        assert cmd.payload["dt"] == [1.0, 0.0, 0.0]
        assert cmd.payload["drot_deg"] == [0.0, 0.0, 0.0]

    def test_pause_resume(self):
        assert SteerCommand.parse('{"v": 1, "cmd": "pause"}').kind == "pause"
        assert SteerCommand.parse('{"v": 1, "cmd": "resume"}').kind == "resume"

    def test_set_noise(self):
        cmd = SteerCommand.parse('{"v": 1, "cmd": "set_noise", "noise_px": 0.5}')
        assert cmd.payload == {"noise_px": 0.5}

    @pytest.mark.parametrize(
        "line,match",
        [
            ("not json", "malformed JSON"),
            ("[1, 2]", "JSON object"),
            ('{"cmd": "pause"}', "protocol version"),
            ('{"v": 2, "cmd": "pause"}', "protocol version"),
            ('{"v": 1, "cmd": "warp"}', "unknown command"),
            ('{"v": 1, "cmd": "set_goal"}', "set_goal"),
            ('{"v": 1, "cmd": "set_goal", "p": [1, 2]}', "set_goal"),
            ('{"v": 1, "cmd": "set_noise", "noise_px": -1}', "set_noise"),
            ('{"v": 1, "cmd": "nudge_coil", "dt": [30, 0, 0]}', "exceeds"),
            ('{"v": 1, "cmd": "nudge_coil", "drot_deg": [0, 25, 0]}', "exceeds"),
        ],
    )
    def test_rejects(self, line, match):
        with pytest.raises(CommandError, match=match):
            SteerCommand.parse(line)

    def test_limits_are_inclusive(self):
        line = json.dumps({"v": 1, "cmd": "nudge_coil",
                           "dt": [NUDGE_LIMIT_MM, 0, 0],
                           "drot_deg": [0, 0, NUDGE_LIMIT_DEG]})
        assert SteerCommand.parse(line).kind == "nudge_coil"


class TestStateRecord:
    def test_schema_and_determinism(self, rig):
        sc = _scenario(rig, n_frames=1)
        state = next(run_pipeline(simulate(sc), rig, Point3(0.0, 0.0, 40.0)))
        rec = json.loads(state_record(state))
        assert rec["v"] == PROTOCOL_VERSION
        assert rec["t_us"] == 0
        for body in ("head", "coil"):
            assert set(rec[body]) == {"q", "t", "sigma", "stale"}
            assert len(rec[body]["q"]) == 4
            assert len(rec[body]["t"]) == 3
            assert rec[body]["stale"] is False
        assert len(rec["target"]) == 3
        assert rec["goal"] == [0.0, 0.0, 40.0]
        assert isinstance(rec["dist_mm"], float)
        assert isinstance(rec["angle_deg"], float)
        assert rec["cams"]
        assert set(rec["cams"][0]) == {"id", "tag", "e_proj", "sigma_d"}
        assert state_record(state) == state_record(state)

    def test_missing_bodies_serialize_as_null(self, rig):
        sc = _scenario(rig, n_frames=1)
        tracker = GuidanceTracker(rig)
        state = tracker.update(assemble_frame([], rig, 0))
        rec = json.loads(state_record(state))
        assert rec["head"] is None
        assert rec["coil"] is None
        assert rec["target"] is None
        assert rec["goal"] is None
        assert rec["dist_mm"] is None


class TestPipeline:
    def test_noiseless_states_match_truth(self, rig):
        sc = _scenario(rig, n_frames=3)
        frames = list(simulate(sc))
        states = list(run_pipeline(iter(frames), rig))
        assert len(states) == 3
        for frame, state in zip(frames, states):
            assert not state.head_stale and not state.coil_stale
            err = np.linalg.norm(
                state.target_point_head.as_array()
                - frame.truth.target_head.as_array()
            )
            assert err < 1e-6

    def test_distance_and_angle_to_goal(self, rig):
        sc = _scenario(rig, n_frames=1)
        truth_target = next(iter(simulate(sc))).truth.target_head
        goal = Point3(truth_target.x, truth_target.y, truth_target.z)
        state = next(run_pipeline(simulate(sc), rig, goal))
        assert state.distance_to_goal_mm < 1e-6
        # goal sits on the coil axis, so the pointing error is ~0
        assert state.angle_to_goal_deg < 1e-3

    def test_stale_hold_keeps_last_pose(self, rig):
        coil_tag = rig.coil_marker.marker.tag_id
        occ = [Occlusion(camera_id=c.camera_id, tag_id=coil_tag,
                         t_start_us=30_000, t_end_us=80_000)
               for c in rig.cameras]
        sc = _scenario(rig, n_frames=4, occlusions=occ)
        states = list(run_pipeline(simulate(sc), rig))
        assert [s.coil_stale for s in states] == [False, True, True, False]
        for s in states:
            # last-known pose is carried through the occlusion window
            assert s.coil_pose is not None
            assert s.target_point_head is not None

    def test_initially_missing_body_is_stale_with_no_pose(self, rig):
        coil_tag = rig.coil_marker.marker.tag_id
        occ = [Occlusion(camera_id=c.camera_id, tag_id=coil_tag,
                         t_start_us=0, t_end_us=10_000)
               for c in rig.cameras]
        sc = _scenario(rig, n_frames=2, occlusions=occ)
        states = list(run_pipeline(simulate(sc), rig))
        assert states[0].coil_stale and states[0].coil_pose is None
        assert not states[1].coil_stale and states[1].coil_pose is not None


@pytest.fixture
def live_server(rig):
    sc = _scenario(rig, n_frames=10_000, seed=1)
    server = serve(sc, realtime=False)
    yield server
    server.stop()


class TestLiveServer:
    def test_streams_ordered_states(self, live_server):
        client = _WireClient(live_server.address)
        try:
            t_prev = -1
            for _ in range(5):
                rec = client.recv_record()
                assert rec["v"] == PROTOCOL_VERSION
                assert rec["t_us"] > t_prev
                t_prev = rec["t_us"]
        finally:
            client.close()

    def test_malformed_command_keeps_connection(self, live_server):
        client = _WireClient(live_server.address)
        try:
            client.send_raw(b"this is not json\n")
            err = client.recv_until(lambda r: "error" in r)
            assert err["v"] == PROTOCOL_VERSION
            assert "malformed JSON" in err["error"]
            client.send({"v": 2, "cmd": "pause"})
            err = client.recv_until(lambda r: "error" in r)
            assert "protocol version" in err["error"]
            # stream continues after both errors
            rec = client.recv_until(lambda r: "t_us" in r)
            assert rec["v"] == PROTOCOL_VERSION
        finally:
            client.close()

    def test_set_goal_and_nudge_change_guidance(self, live_server):
        client = _WireClient(live_server.address)
        try:
            first = client.recv_until(lambda r: "t_us" in r)
            assert first["goal"] is None
            target = first["target"]
            client.send({"v": 1, "cmd": "set_goal", "p": target})
            rec = client.recv_until(
                lambda r: "t_us" in r and r.get("goal") == target
            )
            assert rec["dist_mm"] < 1e-6
            t_seen = rec["t_us"]
            client.send({"v": 1, "cmd": "nudge_coil", "dt": [5.0, 0.0, 0.0]})
            rec = client.recv_until(
                lambda r: "t_us" in r and r["t_us"] > t_seen
                and r["dist_mm"] > 1.0
            )
            assert abs(rec["dist_mm"] - 5.0) < 0.5
        finally:
            client.close()

    def test_pause_and_resume(self, live_server):
        client = _WireClient(live_server.address)
        try:
            client.send({"v": 1, "cmd": "pause"})
            # drain whatever was in flight, then confirm silence
            deadline = time.monotonic() + 0.5
            last = None
            client.sock.settimeout(0.2)
            while time.monotonic() < deadline:
                try:
                    last = client.recv_record()
                except (TimeoutError, socket.timeout):
                    break
            frozen = live_server.source.frames_generated
            time.sleep(0.3)
            assert live_server.source.frames_generated == frozen
            client.sock.settimeout(5.0)
            client.send({"v": 1, "cmd": "resume"})
            rec = client.recv_until(lambda r: "t_us" in r)
            if last is not None and "t_us" in last:
                assert rec["t_us"] > last["t_us"]
        finally:
            client.close()

    def test_multiple_clients_each_receive_states(self, live_server):
        a = _WireClient(live_server.address)
        b = _WireClient(live_server.address)
        try:
            ra = a.recv_until(lambda r: "t_us" in r)
            rb = b.recv_until(lambda r: "t_us" in r)
            assert ra["v"] == rb["v"] == PROTOCOL_VERSION
        finally:
            a.close()
            b.close()

    def test_stops_after_max_frames(self, rig):
        sc = _scenario(rig, n_frames=100, seed=2)
        server = GuidanceServer(sc, realtime=False, max_frames=5)
        server.start()
        try:
            server.join(timeout=10.0)
            assert server.source.frames_generated == 5
        finally:
            server.stop()
