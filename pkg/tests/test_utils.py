"""
Tests des exports, instantanés et de l'aléa reproductible
"""
import math

import numpy as np
import pandas as pd
import pytest

from errors import ArgumentError, ReportError
from spectral_core import PeriodicGrid
from utils import band_limited_values, make_rng, read_json, read_snapshot, write_csv, write_json, write_snapshot


def test_csv_is_bit_identical(tmp_path):
    frame = pd.DataFrame({'t': [0.0, 0.1], 'linf': [1.0, 1.0 / 3.0]})
    write_csv(frame, tmp_path / 'a.csv')
    write_csv(frame.to_dict('records'), tmp_path / 'b.csv')
    assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()
    assert pd.read_csv(tmp_path / 'a.csv')['linf'][1] == 1.0 / 3.0


def test_json_labels_non_finite(tmp_path):
    path = write_json({'b': math.inf, 'a': [np.float64(0.5), -math.inf], 'n': np.int64(3)}, tmp_path / 'x.json')
    data = read_json(path)
    assert data == {'a': [0.5, '-inf'], 'b': 'inf', 'n': 3}
    assert path.read_text(encoding='utf-8').index('"a"') < path.read_text(encoding='utf-8').index('"b"')


def test_snapshot_errors(tmp_path):
    values = np.arange(16.0).reshape(4, 4)
    path = write_snapshot(tmp_path / 's.bin', 2, 4, values)
    d, N, back = read_snapshot(path)
    assert (d, N) == (2, 4)
    np.testing.assert_array_equal(back, values)
    (tmp_path / 'short.bin').write_bytes(b'\x00' * 8)
    with pytest.raises(ReportError):
        read_snapshot(tmp_path / 'short.bin')
    with pytest.raises(ReportError):
        read_snapshot(tmp_path / 'absent.bin')


def test_band_limited_field():
    grid = PeriodicGrid(2, 32)
    values = band_limited_values(grid, make_rng(5), kmax=4, amplitude=2.0)
    assert np.abs(values).max() == pytest.approx(2.0)
    assert abs(values.mean()) < 1e-12
    spectrum = np.abs(np.fft.fftn(values))
    assert spectrum[grid.kmag > 4].max() < 1e-9 * spectrum.max()
    np.testing.assert_array_equal(values, band_limited_values(grid, make_rng(5), kmax=4, amplitude=2.0))
    with pytest.raises(ArgumentError):
        band_limited_values(grid, make_rng(0), kmax=20)
