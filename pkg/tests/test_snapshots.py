import numpy as np
import pytest

from talbot.exceptions import SnapshotFormatError
from talbot.services.scaling import init_packet
from talbot.services.snapshots import (
    FORMAT_VERSION,
    HEADER,
    MAGIC,
    decode_header,
    decode_snapshot,
    encode_snapshot,
    inspect_snapshot,
    read_snapshot,
    write_snapshot,
)


@pytest.fixture
def packet_field(square_grid, slow_packet):
    field = init_packet(slow_packet, square_grid, 0.01)
    field.step_index = 42
    return field


def test_header_layout():
    assert HEADER.size == 8 + 3 * 4 + 6 * 8 + 8 + 3 * 8
    assert MAGIC == b"QTALBOT1"


def test_snapshot_preserves_lattice_and_metadata(tmp_path, packet_field, frame):
    path = tmp_path / "packet.qsnap"
    size = write_snapshot(path, packet_field, frame)
    assert size == HEADER.size + 2 * packet_field.grid.size * 8
    loaded, header = read_snapshot(path)
    assert header.version == FORMAT_VERSION
    assert header.step_index == 42
    assert header.time == pytest.approx(0.42)
    assert header.frame() == frame
    assert loaded.grid == packet_field.grid
    np.testing.assert_array_equal(loaded.real, packet_field.real)
    np.testing.assert_array_equal(loaded.imag, packet_field.imag)
    # the T - dT/2 lattice is not stored
    assert loaded.imag_prev is None


def test_inspect_reads_only_the_header(tmp_path, packet_field, frame):
    path = tmp_path / "packet.qsnap"
    write_snapshot(path, packet_field, frame)
    header = inspect_snapshot(path)
    assert (header.nx, header.ny) == packet_field.grid.shape
    assert header.as_dict()["dt"] == pytest.approx(0.01)


def test_bad_magic_is_rejected(packet_field, frame):
    data = bytearray(encode_snapshot(packet_field, frame))
    data[:8] = b"NOTASNAP"
    with pytest.raises(SnapshotFormatError, match="magic"):
        decode_snapshot(bytes(data))


def test_unknown_version_is_rejected(packet_field, frame):
    data = bytearray(encode_snapshot(packet_field, frame))
    data[8:12] = (FORMAT_VERSION + 1).to_bytes(4, "little")
    with pytest.raises(SnapshotFormatError, match="version"):
        decode_header(bytes(data))


def test_truncated_payload_is_rejected(tmp_path, packet_field, frame):
    data = encode_snapshot(packet_field, frame)
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(data[:-8])
    with pytest.raises(SnapshotFormatError):
        decode_header(data[:10])
    path = tmp_path / "short.qsnap"
    path.write_bytes(data[:-8])
    with pytest.raises(SnapshotFormatError):
        inspect_snapshot(path)
