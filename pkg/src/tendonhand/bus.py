"""Board-level bus emulation: frame codec, lossy channel, polling rounds.

Frame layout (13 bytes)::

    0      sync 0xAA
    1      board id   (0-4 sensor boards, 5-8 driver boards, 9 central)
    2      command
    3..10  payload, 8 bytes, little-endian fields
    11..12 CRC-16/CCITT-FALSE over bytes 0..10, little-endian

CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor;
check value for ASCII ``123456789`` is 0x29B1.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import control
from .errors import (BadSyncError, CrcError, FrameLengthError, IncompleteFrameError,
                     UnknownBoardError)

SYNC = 0xAA
FRAME_LEN = 13
PAYLOAD_LEN = 8
CENTRAL_ID = 9
SENSOR_IDS = control.SENSOR_BOARD_IDS
DRIVER_IDS = control.DRIVER_BOARD_IDS
VALID_IDS = frozenset(range(10))

# central <-> boards
CMD_READ_POSITION = 0x01
CMD_POSITION = 0x81
CMD_SET_CURRENT = 0x02
CMD_ACK = 0x82
# host <-> central
CMD_SET_REFERENCE = 0x10
CMD_STEP = 0x11
CMD_STATE = 0x90
CMD_NACK = 0xFF

REF_LSB = 1e-4  # rad per count in host reference/state frames

ZERO_PAYLOAD = bytes(PAYLOAD_LEN)


def _make_table(poly=0x1021):
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ poly) if crc & 0x8000 else (crc << 1)
        table.append(crc & 0xFFFF)
    return tuple(table)


_CRC_TABLE = _make_table()


def crc16_ccitt_false(data, crc=0xFFFF):
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[(crc >> 8) ^ b]
    return crc


@dataclass(frozen=True)
class BusFrame:
    board_id: int
    command: int
    payload: bytes


def encode_frame(board_id, command, payload):
    payload = bytes(payload)
    if len(payload) != PAYLOAD_LEN:
        raise FrameLengthError(f"payload must be {PAYLOAD_LEN} bytes, got {len(payload)}")
    if board_id not in VALID_IDS:
        raise UnknownBoardError(f"unknown board id {board_id}")
    if not 0 <= command <= 0xFF:
        raise FrameLengthError("command must fit in one byte")
    body = bytes((SYNC, board_id, command)) + payload
    return body + struct.pack("<H", crc16_ccitt_false(body))


def decode_frame(data):
    """Decode the frame at the start of ``data``.

    Raises :class:`IncompleteFrameError` when fewer than 13 bytes are
    available, otherwise :class:`BadSyncError`, :class:`CrcError` or
    :class:`UnknownBoardError` for a bad frame.
    """
    data = bytes(data)
    if len(data) < FRAME_LEN:
        raise IncompleteFrameError(f"need {FRAME_LEN} bytes, have {len(data)}")
    if data[0] != SYNC:
        raise BadSyncError(f"bad sync byte 0x{data[0]:02X}")
    (crc,) = struct.unpack_from("<H", data, FRAME_LEN - 2)
    if crc16_ccitt_false(data[:FRAME_LEN - 2]) != crc:
        raise CrcError("CRC mismatch")
    if data[1] not in VALID_IDS:
        raise UnknownBoardError(f"unknown board id {data[1]}")
    return BusFrame(data[1], data[2], data[3:FRAME_LEN - 2])


class FrameDecoder:
    """Incremental decoder for a byte stream of frames.

    After a bad frame it drops one byte and rescans for the next sync byte,
    so a stream recovers at the first intact frame.
    """

    def __init__(self):
        self.buffer = bytearray()
        self.errors = {"bad_sync": 0, "crc": 0, "unknown_board": 0}

    def feed(self, data):
        self.buffer.extend(data)
        frames = []
        while True:
            start = self.buffer.find(SYNC)
            if start < 0:
                if self.buffer:
                    self.errors["bad_sync"] += 1
                self.buffer.clear()
                break
            if start:
                self.errors["bad_sync"] += 1
                del self.buffer[:start]
            try:
                frames.append(decode_frame(self.buffer))
            except IncompleteFrameError:
                break
            except CrcError:
                self.errors["crc"] += 1
                del self.buffer[:1]
                continue
            except UnknownBoardError:
                self.errors["unknown_board"] += 1
                del self.buffer[:1]
                continue
            del self.buffer[:FRAME_LEN]
        return frames


def hexdump(frame_bytes):
    return " ".join(f"{b:02X}" for b in frame_bytes)


# --- payload helpers --------------------------------------------------------

def pack_codes(codes):
    return struct.pack("<4H", *(int(c) for c in codes))


def unpack_codes(payload):
    return np.array(struct.unpack("<4H", payload), dtype=np.int64)


def pack_currents(codes):
    return struct.pack("<4h", *(int(c) for c in codes))


def unpack_currents(payload):
    return np.array(struct.unpack("<4h", payload), dtype=np.int64)


def _angle_counts(theta):
    return [int(np.clip(np.rint(t / REF_LSB), -32767, 32767)) for t in theta]


def pack_reference(finger, theta):
    return struct.pack("<BB3h", finger, 0, *_angle_counts(theta))


def unpack_reference(payload):
    finger, _, *counts = struct.unpack("<BB3h", payload)
    return finger, np.array(counts, dtype=float) * REF_LSB


def pack_state(finger, flags, theta):
    return struct.pack("<BB3h", finger, flags, *_angle_counts(theta))


def unpack_state(payload):
    finger, flags, *counts = struct.unpack("<BB3h", payload)
    return finger, flags, np.array(counts, dtype=float) * REF_LSB


# --- channel and polling ----------------------------------------------------

class LossyChannel:
    """Seeded frame channel that may drop a frame or flip one of its bits."""

    def __init__(self, drop_prob=0.0, corrupt_prob=0.0, seed=0, log=None):
        self.drop_prob = drop_prob
        self.corrupt_prob = corrupt_prob
        self.rng = np.random.default_rng(seed)
        self.log = log

    def transmit(self, frame_bytes):
        u_drop, u_corrupt = self.rng.random(2)
        bit = int(self.rng.integers(0, 8 * len(frame_bytes)))
        if u_drop < self.drop_prob:
            if self.log is not None:
                self.log.append("DROP " + hexdump(frame_bytes))
            return None
        out = bytearray(frame_bytes)
        if u_corrupt < self.corrupt_prob:
            out[bit // 8] ^= 1 << (bit % 8)
        if self.log is not None:
            self.log.append(hexdump(out))
        return bytes(out)


def _receive(channel, frame_bytes, expect_board, expect_command):
    wire = channel.transmit(frame_bytes)
    if wire is None:
        return None, "dropped"
    try:
        frame = decode_frame(wire)
    except (BadSyncError, CrcError, UnknownBoardError):
        return None, "corrupt"
    if frame.board_id != expect_board or frame.command != expect_command:
        return None, "corrupt"
    return frame, "ok"


@dataclass
class BusStats:
    sensor_frames: int = 0
    command_frames: int = 0
    dropped: int = 0
    corrupt: int = 0
    retries: int = 0
    stale_sensor: list = field(default_factory=lambda: [False] * len(SENSOR_IDS))
    stale_command: list = field(default_factory=lambda: [False] * len(DRIVER_IDS))


class BusLink:
    """Central controller side of the bus; a drop-in for ``control.DirectLink``.

    Every exchange is a request/response pair of encoded frames through
    ``channel``; a failed exchange is retried once within the round, after
    which the data is flagged stale.
    """

    def __init__(self, channel=None):
        self.channel = LossyChannel() if channel is None else channel
        self.last = BusStats()
        self.totals = BusStats()

    def poll(self, tick, sensor_codes):
        stats = BusStats()
        self.last = stats
        seen = np.zeros_like(np.asarray(sensor_codes))
        stale = np.zeros(len(SENSOR_IDS), dtype=bool)
        for i, board in enumerate(SENSOR_IDS):
            request = encode_frame(board, CMD_READ_POSITION, ZERO_PAYLOAD)
            reply = self._round_trip(request, board, CMD_POSITION, stats,
                                     lambda f, i=i, board=board: encode_frame(
                                         board, CMD_POSITION, pack_codes(sensor_codes[i])))
            if reply is None:
                stale[i] = True
            else:
                seen[i] = unpack_codes(reply.payload)
                stats.sensor_frames += 1
        stats.stale_sensor = stale.tolist()
        return seen, stale

    def push(self, tick, slot_codes, boards):
        stats = self.last
        for b, board in enumerate(DRIVER_IDS):
            request = encode_frame(board, CMD_SET_CURRENT, pack_currents(slot_codes[b]))

            def on_command(frame, b=b, board=board):
                boards.receive(b, unpack_currents(frame.payload))
                return encode_frame(board, CMD_ACK, frame.payload)

            reply = self._round_trip(request, board, CMD_ACK, stats, on_command)
            stats.stale_command[b] = reply is None
            if reply is not None:
                stats.command_frames += 1
        for name in ("sensor_frames", "command_frames", "dropped", "corrupt", "retries"):
            setattr(self.totals, name, getattr(self.totals, name) + getattr(stats, name))

    def _round_trip(self, request, board, reply_command, stats, respond):
        for attempt in range(2):
            if attempt:
                stats.retries += 1
            got, status = _receive(self.channel, request, board, request[2])
            if got is not None:
                got, status = _receive(self.channel, respond(got), board, reply_command)
                if got is not None:
                    return got
            if status == "dropped":
                stats.dropped += 1
            else:
                stats.corrupt += 1
        return None


class BusNetwork:
    """Central controller, five sensor boards and four driver boards on one bus.

    Stand-alone version of the board network for exercising the protocol
    without the joint plant: sensor boards report fixed codes and driver
    rotors are held still.
    """

    def __init__(self, cfg, channel=None, sensor_codes=None):
        self.cfg = cfg
        self.timing = control.LoopTiming(**cfg.timing)
        self.link = BusLink(channel)
        self.drivers = control.DriverBoards(cfg, self.timing)
        if sensor_codes is None:
            sensor_codes = np.full((len(SENSOR_IDS), 4), 1 << (cfg.sensor.adc_bits - 1), dtype=np.int64)
        self.sensor_codes = np.asarray(sensor_codes, dtype=np.int64)
        self.command_codes = np.zeros((len(DRIVER_IDS), 4), dtype=np.int64)
        self.central_codes = self.sensor_codes.copy()
        self.tick_index = 0

    def set_current_targets(self, currents):
        """Queue current targets (A) as a ``(4, 4)`` board x slot array."""
        self.command_codes = control.quantize_current(currents, self.cfg.current_lsb).reshape(4, 4)


def bus_tick(network, schedule=None):
    """One 50 Hz round: poll sensors, push current targets, run driver loops.

    Returns the per-round deltas: frame counts, stale flags, watchdog modes
    and the number of inner ticks executed.
    """
    schedule = network.timing if schedule is None else schedule
    seen, stale = network.link.poll(network.tick_index, network.sensor_codes)
    network.central_codes = np.where(stale[:, None], network.central_codes, seen)
    network.link.push(network.tick_index, network.command_codes, network.drivers)
    network.drivers.end_round()
    n = 0
    still = np.zeros(len(DRIVER_IDS) * 4)
    for _ in range(schedule.inner_per_outer):
        network.drivers.inner_step(still, schedule.inner_dt)
        n += 1
    network.tick_index += 1
    s = network.link.last
    return {
        "tick": network.tick_index,
        "sensor_frames": s.sensor_frames,
        "command_frames": s.command_frames,
        "dropped": s.dropped,
        "corrupt": s.corrupt,
        "retries": s.retries,
        "stale_sensor": s.stale_sensor,
        "stale_command": s.stale_command,
        "watchdog": [control.watchdog_step(a, schedule.watchdog_window).value
                     for a in network.drivers.frame_age],
        "currents": network.drivers.current.tolist(),
        "inner_ticks": n,
    }


class HostPort:
    """Byte-stream host interface to a running :class:`control.HandSimulator`.

    The host writes frames addressed to the central controller (id 9):
    ``CMD_SET_REFERENCE`` sets one finger's three joint references and
    ``CMD_STEP`` advances the simulation by a number of outer ticks, after
    which one ``CMD_STATE`` frame per finger is returned.
    """

    def __init__(self, sim):
        self.sim = sim
        self.decoder = FrameDecoder()
        self.refs = sim.state.theta.copy()

    def feed(self, data):
        out = bytearray()
        for frame in self.decoder.feed(data):
            out += self._handle(frame)
        return bytes(out)

    def _nack(self, code):
        return encode_frame(CENTRAL_ID, CMD_NACK, bytes([code]) + bytes(PAYLOAD_LEN - 1))

    def _handle(self, frame):
        if frame.board_id != CENTRAL_ID:
            return self._nack(1)
        if frame.command == CMD_SET_REFERENCE:
            finger, theta = unpack_reference(frame.payload)
            if finger >= control.N_FINGERS:
                return self._nack(2)
            self.refs[finger] = theta
            return b""
        if frame.command == CMD_STEP:
            (n,) = struct.unpack_from("<H", frame.payload)
            for _ in range(n):
                self.sim.tick(self.refs.reshape(-1))
            return self.state_frames()
        return self._nack(3)

    def state_frames(self):
        s = self.sim.state
        stopped = s.faults.get("protective_stop", [False] * 4)
        stale = s.faults.get("stale_sensor", [False] * 5)
        faults = s.faults.get("finger_fault", [False] * 5)
        out = bytearray()
        for f in range(control.N_FINGERS):
            flags = (int(bool(faults[f])) | (int(any(stopped)) << 1) | (int(bool(stale[f])) << 2))
            out += encode_frame(CENTRAL_ID, CMD_STATE, pack_state(f, flags, s.theta[f]))
        return bytes(out)
