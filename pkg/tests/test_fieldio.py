import numpy as np
import pytest

from conftest import quadratic
from hesslab.errors import ConfigError
from hesslab.field import GridDomain, GridField
from hesslab.fieldio import header_line, read_field, write_field


def test_header_is_one_ascii_line(disk):
    line = header_line(disk)
    assert line.startswith("HESSFIELD v1 n=1 shape=17,17 h=0.125 ")
    assert line.endswith("kind=ball\n")


@pytest.mark.parametrize("make", [
    lambda: GridDomain.ball(1, 17),
    lambda: GridDomain.box(2, 5, lower=0.5, upper=1.5),
    lambda: GridDomain.torus(1, 8),
])
def test_write_then_read_keeps_grid_and_values(tmp_path, make):
    u = quadratic(make(), 0.5)
    path = write_field(tmp_path / "sub" / "u.hf", u)
    back = read_field(path)
    assert back.domain.same_as(u.domain)
    assert np.array_equal(np.isnan(back.values), np.isnan(u.values))
    assert np.allclose(back.values, u.values, equal_nan=True, rtol=0, atol=0)


def test_size_on_disk(tmp_path, disk):
    path = write_field(tmp_path / "u.hf", GridField.constant(disk, 1.0))
    assert path.stat().st_size == len(header_line(disk)) + 8 * 17 * 17


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.hf"
    path.write_bytes(b"NOTAFIELD v1 n=1 shape=5,5 h=0.5 origin=0,0 kind=box\n")
    with pytest.raises(ConfigError):
        read_field(path)


def test_truncated_body(tmp_path, square):
    path = write_field(tmp_path / "u.hf", GridField.constant(square, 1.0))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ConfigError):
        read_field(path)


def test_malformed_item(tmp_path):
    path = tmp_path / "bad.hf"
    path.write_bytes(b"HESSFIELD v1 n=one shape=5,5 h=0.5 origin=0,0 kind=box\n")
    with pytest.raises(ConfigError):
        read_field(path)
