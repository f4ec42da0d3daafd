"""Real-time tracking pipeline and TCP guidance streaming.

The pipeline binds an observation source (live simulator or recorded
frame stream) to per-camera solves and fusion, producing one guidance
state per frame. ``serve`` pushes those states to any number of TCP
clients as newline-delimited JSON records (schema version 1) and accepts
steering commands on the same connection. Commands mutate the live
simulator truth through a single coordinator queue, so they take effect
on the next generated frame.

State record fields:
    v, t_us, head {q[4], t[3], sigma[3], stale}, coil {...}, target[3],
    goal[3] | null, dist_mm | null, angle_deg | null,
    cams [{id, tag, e_proj, sigma_d}]
Command records:
    {"v": 1, "cmd": "set_goal", "p": [x, y, z]}
    {"v": 1, "cmd": "nudge_coil", "dt": [x, y, z], "drot_deg": [rx, ry, rz]}
    {"v": 1, "cmd": "set_noise", "noise_px": s}
    {"v": 1, "cmd": "pause"} / {"v": 1, "cmd": "resume"}
"""

from __future__ import annotations

import json
import math
import queue
import socket
import threading
import time
from dataclasses import dataclass

import numpy as np

from .fusion import TranslationSigma
from .geometry import Point3, RigidTransform, Rotation, compose
from .rig import RigConfig, TrackedFramePoses, assemble_frame, target_point
from .simulator import Scenario, SimFrame, pose_at, synthesize_frame

PROTOCOL_VERSION = 1
NUDGE_LIMIT_MM = 20.0
NUDGE_LIMIT_DEG = 20.0


class CommandError(ValueError):
    pass


@dataclass(frozen=True)
class SteerCommand:
    kind: str
    payload: dict

    @staticmethod
    def parse(line: str) -> "SteerCommand":
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CommandError(f"malformed JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise CommandError("command must be a JSON object")
        if doc.get("v") != PROTOCOL_VERSION:
            raise CommandError(
                f"unsupported protocol version {doc.get('v')!r}; "
                f"expected {PROTOCOL_VERSION}"
            )
        kind = doc.get("cmd")
        if kind == "set_goal":
            p = doc.get("p")
            if (not isinstance(p, list) or len(p) != 3
                    or not all(isinstance(x, (int, float)) for x in p)):
                raise CommandError("set_goal needs p: [x, y, z]")
            return SteerCommand("set_goal", {"p": [float(x) for x in p]})
        if kind == "nudge_coil":
            dt = doc.get("dt", [0.0, 0.0, 0.0])
            drot = doc.get("drot_deg", [0.0, 0.0, 0.0])
            for v, n in ((dt, "dt"), (drot, "drot_deg")):
                if (not isinstance(v, list) or len(v) != 3
                        or not all(isinstance(x, (int, float)) for x in v)):
                    raise CommandError(f"nudge_coil {n} must be [x, y, z]")
            if float(np.linalg.norm(dt)) > NUDGE_LIMIT_MM:
                raise CommandError(f"nudge translation exceeds {NUDGE_LIMIT_MM} mm")
            if float(np.linalg.norm(drot)) > NUDGE_LIMIT_DEG:
                raise CommandError(f"nudge rotation exceeds {NUDGE_LIMIT_DEG} deg")
            return SteerCommand(
                "nudge_coil",
                {"dt": [float(x) for x in dt],
                 "drot_deg": [float(x) for x in drot]},
            )
        if kind == "set_noise":
            s = doc.get("noise_px")
            if not isinstance(s, (int, float)) or s < 0:
                raise CommandError("set_noise needs noise_px >= 0")
            return SteerCommand("set_noise", {"noise_px": float(s)})
        if kind in ("pause", "resume"):
            return SteerCommand(kind, {})
        raise CommandError(f"unknown command {kind!r}")


@dataclass(frozen=True)
class GuidanceState:
    timestamp_us: int
    head_pose: RigidTransform | None
    head_sigma: TranslationSigma | None
    head_stale: bool
    coil_pose: RigidTransform | None
    coil_sigma: TranslationSigma | None
    coil_stale: bool
    target_point_head: Point3 | None
    goal_point_head: Point3 | None
    distance_to_goal_mm: float | None
    angle_to_goal_deg: float | None
    diagnostics: tuple[tuple[int, int, float, float], ...]


def _pose_doc(pose, sigma, stale):
    if pose is None:
        return None
    return {
        "q": [pose.rotation.w, pose.rotation.x, pose.rotation.y, pose.rotation.z],
        "t": [pose.translation.x, pose.translation.y, pose.translation.z],
        "sigma": list(map(float, sigma.as_array())) if sigma else None,
        "stale": stale,
    }


def state_record(state: GuidanceState) -> str:
    doc = {
        "v": PROTOCOL_VERSION,
        "t_us": state.timestamp_us,
        "head": _pose_doc(state.head_pose, state.head_sigma, state.head_stale),
        "coil": _pose_doc(state.coil_pose, state.coil_sigma, state.coil_stale),
        "target": (
            [state.target_point_head.x, state.target_point_head.y,
             state.target_point_head.z]
            if state.target_point_head else None
        ),
        "goal": (
            [state.goal_point_head.x, state.goal_point_head.y,
             state.goal_point_head.z]
            if state.goal_point_head else None
        ),
        "dist_mm": state.distance_to_goal_mm,
        "angle_deg": state.angle_to_goal_deg,
        "cams": [
            {"id": c, "tag": t, "e_proj": e, "sigma_d": s}
            for c, t, e, s in state.diagnostics
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


class GuidanceTracker:
    """Turns per-frame fusion results into guidance states.

    Keeps last-known head/coil poses so frames with missing bodies
    degrade gracefully (flagged stale instead of dropped).
    """

    def __init__(self, rig: RigConfig, goal_point_head: Point3 | None = None):
        self.rig = rig
        self.goal = goal_point_head
        self._last_head = None
        self._last_head_sigma = None
        self._last_coil = None
        self._last_coil_sigma = None

    def update(self, result: TrackedFramePoses) -> GuidanceState:
        head_stale = result.head_pose is None
        coil_stale = result.coil_pose is None
        if result.head_pose is not None:
            self._last_head = result.head_pose
            self._last_head_sigma = result.head_sigma
        if result.coil_pose is not None:
            self._last_coil = result.coil_pose
            self._last_coil_sigma = result.coil_sigma
        target = result.target_point_head
        if target is None and self._last_head is not None \
                and self._last_coil is not None:
            target = target_point(self._last_head, self._last_coil, self.rig)
        dist = angle = None
        if target is not None and self.goal is not None:
            dist = float(
                np.linalg.norm(target.as_array() - self.goal.as_array())
            )
        if self._last_coil is not None and self.goal is not None \
                and self._last_head is not None:
            # Angle between the coil -z axis and the head-frame ray from
            # the coil origin to the goal, both expressed in world.
            coil_axis = self._last_coil.rotation.apply([0.0, 0.0, -1.0])
            goal_world = self._last_head.apply(self.goal.as_array())
            ray = goal_world - self._last_coil.translation.as_array()
            n = np.linalg.norm(ray)
            if n > 1e-9:
                c = float(np.clip(coil_axis @ (ray / n), -1.0, 1.0))
                angle = math.degrees(math.acos(c))
        return GuidanceState(
            timestamp_us=result.timestamp_us,
            head_pose=self._last_head,
            head_sigma=self._last_head_sigma,
            head_stale=head_stale,
            coil_pose=self._last_coil,
            coil_sigma=self._last_coil_sigma,
            coil_stale=coil_stale,
            target_point_head=target,
            goal_point_head=self.goal,
            distance_to_goal_mm=dist,
            angle_to_goal_deg=angle,
            diagnostics=result.diagnostics,
        )


def run_pipeline(frames, rig: RigConfig, goal_point_head: Point3 | None = None):
    """Map a SimFrame stream to a GuidanceState stream."""
    tracker = GuidanceTracker(rig, goal_point_head)
    for frame in frames:
        result = assemble_frame(list(frame.observations), rig, frame.timestamp_us)
        yield tracker.update(result)


class LiveSimulator:
    """A steerable simulator source.

    Ground truth is mutated only between frames by the coordinator
    thread, which applies queued steering commands before generating the
    next frame.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.rig = scenario.rig
        self._rng = np.random.default_rng(scenario.seed)
        self._i = 0
        self._head = pose_at(scenario.head_trajectory, 0)
        self._coil = pose_at(scenario.coil_trajectory, 0)
        self._coil_offset = RigidTransform.identity(self._coil.from_frame)
        self._noise = scenario.noise_px
        self.paused = False

    def apply(self, cmd: SteerCommand, tracker: GuidanceTracker) -> None:
        if cmd.kind == "nudge_coil":
            # Translation is along the current coil axes; rotation is a
            # body-frame rotation vector in degrees.
            dt = np.asarray(cmd.payload["dt"])
            drot = np.asarray(cmd.payload["drot_deg"])
            delta = RigidTransform.make(
                Rotation.from_rotvec(np.radians(drot)), dt,
                self._coil.from_frame, self._coil.from_frame,
            )
            self._coil_offset = compose(self._coil_offset, delta)
        elif cmd.kind == "set_goal":
            tracker.goal = Point3(*cmd.payload["p"])
        elif cmd.kind == "set_noise":
            self._noise = cmd.payload["noise_px"]
        elif cmd.kind == "pause":
            self.paused = True
        elif cmd.kind == "resume":
            self.paused = False

    def coil_truth(self) -> RigidTransform:
        t_us = round(self._i * 1_000_000.0 / self.scenario.frame_rate_hz)
        base = pose_at(self.scenario.coil_trajectory, t_us)
        return compose(base, self._coil_offset)

    def next_frame(self) -> SimFrame:
        t_us = round(self._i * 1_000_000.0 / self.scenario.frame_rate_hz)
        head = pose_at(self.scenario.head_trajectory, t_us)
        coil = compose(pose_at(self.scenario.coil_trajectory, t_us),
                       self._coil_offset)
        frame = synthesize_frame(
            self.rig, head, coil, t_us, self._noise, self._rng,
            self.scenario.occlusions,
        )
        self._i += 1
        return frame

    @property
    def frames_generated(self) -> int:
        return self._i


class _Client:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        # One-slot latest-state mailbox: a slow client observes dropped,
        # never reordered, states.
        self.mailbox: queue.Queue[str] = queue.Queue(maxsize=1)
        self.alive = True

    def offer(self, record: str) -> None:
        try:
            self.mailbox.put_nowait(record)
        except queue.Full:
            try:
                self.mailbox.get_nowait()
            except queue.Empty:
                pass
            try:
                self.mailbox.put_nowait(record)
            except queue.Full:
                pass

    def send_line(self, line: str) -> None:
        self.sock.sendall(line.encode("utf-8") + b"\n")

    def close(self) -> None:
        self.alive = False
        # shutdown first: it emits FIN right away and unblocks a reader
        # thread sitting in recv, which would otherwise defer the
        # underlying close.
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


class GuidanceServer:
    """TCP server streaming guidance states and accepting steer commands."""

    def __init__(
        self,
        scenario: Scenario,
        host: str = "127.0.0.1",
        port: int = 0,
        realtime: bool = True,
        max_frames: int | None = None,
    ):
        self.source = LiveSimulator(scenario)
        self.tracker = GuidanceTracker(scenario.rig)
        self.realtime = realtime
        self.max_frames = max_frames if max_frames is not None \
            else scenario.n_frames
        self.commands: queue.Queue[SteerCommand] = queue.Queue()
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._stop = threading.Event()
        self._listener = socket.create_server((host, port))
        self.address = self._listener.getsockname()
        self._threads: list[threading.Thread] = []

    @property
    def client_count(self) -> int:
        with self._clients_lock:
            return len(self._clients)

    def start(self) -> None:
        t_accept = threading.Thread(target=self._accept_loop, daemon=True)
        t_pipe = threading.Thread(target=self._pipeline_loop, daemon=True)
        self._threads = [t_accept, t_pipe]
        for t in self._threads:
            t.start()

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._clients_lock:
            for c in self._clients:
                c.close()

    def join(self, timeout: float | None = None) -> None:
        for t in self._threads:
            t.join(timeout)

    # -- internals ---------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            client = _Client(sock)
            with self._clients_lock:
                self._clients.append(client)
            threading.Thread(
                target=self._reader_loop, args=(client,), daemon=True
            ).start()
            threading.Thread(
                target=self._writer_loop, args=(client,), daemon=True
            ).start()

    def _reader_loop(self, client: _Client) -> None:
        buf = b""
        while client.alive and not self._stop.is_set():
            try:
                chunk = client.sock.recv(4096)
            except OSError:
                break
            if not chunk:
                break
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                text = line.decode("utf-8", errors="replace").strip()
                if not text:
                    continue
                try:
                    cmd = SteerCommand.parse(text)
                except CommandError as exc:
                    # Malformed command: error record back, stream continues.
                    try:
                        client.send_line(json.dumps(
                            {"v": PROTOCOL_VERSION, "error": str(exc)},
                            sort_keys=True, separators=(",", ":"),
                        ))
                    except OSError:
                        client.alive = False
                    continue
                self.commands.put(cmd)
        client.alive = False

    def _writer_loop(self, client: _Client) -> None:
        while client.alive and not self._stop.is_set():
            try:
                record = client.mailbox.get(timeout=0.1)
            except queue.Empty:
                continue
            try:
                client.send_line(record)
            except OSError:
                client.alive = False
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)
        client.close()

    def _pipeline_loop(self) -> None:
        period = 1.0 / self.source.scenario.frame_rate_hz
        while not self._stop.is_set() \
                and self.source.frames_generated < self.max_frames:
            t0 = time.monotonic()
            # Single writer of scenario state: drain all pending
            # commands before generating the next frame.
            while True:
                try:
                    cmd = self.commands.get_nowait()
                except queue.Empty:
                    break
                self.source.apply(cmd, self.tracker)
            if self.source.paused:
                time.sleep(period if self.realtime else 0.001)
                continue
            frame = self.source.next_frame()
            result = assemble_frame(
                list(frame.observations), self.source.rig, frame.timestamp_us
            )
            state = self.tracker.update(result)
            record = state_record(state)
            with self._clients_lock:
                for c in list(self._clients):
                    c.offer(record)
            if self.realtime:
                elapsed = time.monotonic() - t0
                if elapsed < period:
                    time.sleep(period - elapsed)
        self._stop.set()


def serve(
    scenario: Scenario,
    host: str = "127.0.0.1",
    port: int = 0,
    realtime: bool = True,
    max_frames: int | None = None,
) -> GuidanceServer:
    """Start a guidance server; returns the running server object."""
    server = GuidanceServer(
        scenario, host=host, port=port, realtime=realtime,
        max_frames=max_frames,
    )
    server.start()
    return server
