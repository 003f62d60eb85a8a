"""Dump formats: spectral fields, tensors, CSV export, reports."""

import numpy as np
import pytest

from tsflow.io import (
    export_grid_csv,
    read_field,
    read_tensor,
    write_field,
    write_report,
    write_tensor,
)
from tsflow.spectral import (
    SpectralScalarField,
    SpectralVectorField,
    make_lattice,
    random_scalar_field,
    random_vector_field,
    scalar_field,
)
from tsflow.viscosity import make_isotropic


class TestFieldDump:
    def test_scalar_round_trip(self, tmp_path):
        g = random_scalar_field(1, make_lattice(2, 4), decay=2.0)
        path = tmp_path / "g.spf"
        write_field(path, g)
        back = read_field(path)
        assert isinstance(back, SpectralScalarField)
        assert back.lattice == g.lattice
        assert back.is_real == g.is_real
        assert np.array_equal(back.coeffs, g.coeffs)

    def test_vector_round_trip(self, tmp_path):
        u = random_vector_field(2, make_lattice(3, 2), decay=2.0, divergence_free=True)
        path = tmp_path / "u.spf"
        write_field(path, u)
        back = read_field(path)
        assert isinstance(back, SpectralVectorField)
        assert np.array_equal(back.coeffs, u.coeffs)
        assert back.zero_mean

    def test_header_layout(self, tmp_path):
        g = random_scalar_field(3, make_lattice(2, 2))
        path = tmp_path / "g.spf"
        write_field(path, g)
        blob = path.read_bytes()
        head = blob.split(b"\n", 5)
        assert head[0] == b"SPF1"
        assert head[1] == b"n=2" and head[2] == b"m=2"
        assert head[3] == b"components=1" and head[4] == b"real=1"
        assert len(head[5]) == 16 * g.lattice.size

    def test_write_is_deterministic(self, tmp_path):
        u = random_vector_field(4, make_lattice(2, 3), decay=2.0)
        a, b = tmp_path / "a.spf", tmp_path / "b.spf"
        write_field(a, u)
        write_field(b, u)
        assert a.read_bytes() == b.read_bytes()

    def test_rejects_corrupt_files(self, tmp_path):
        path = tmp_path / "bad.spf"
        path.write_bytes(b"SPX1\nn=2\nm=2\ncomponents=1\nreal=1\n")
        with pytest.raises(ValueError):
            read_field(path)
        g = random_scalar_field(5, make_lattice(2, 2))
        path2 = tmp_path / "trunc.spf"
        write_field(path2, g)
        path2.write_bytes(path2.read_bytes()[:-8])
        with pytest.raises(ValueError):
            read_field(path2)


class TestTensorFile:
    def test_round_trip(self, tmp_path):
        A = make_isotropic(1.5, 0.75, 2)
        path = tmp_path / "iso.txt"
        write_tensor(path, A)
        back = read_tensor(path)
        assert back.n == 2
        np.testing.assert_allclose(back.entries, A.entries, atol=0)

    def test_format_is_one_based_and_sparse(self, tmp_path):
        A = make_isotropic(0.0, 1.0, 2)
        path = tmp_path / "iso.txt"
        write_tensor(path, A)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "n=2"
        assert "1 1 1 1 2" in lines
        # zero entries are omitted: the unit isotropic tensor has 6 nonzero
        # entries in two dimensions
        assert len(lines) == 7

    def test_omitted_entries_are_zero(self, tmp_path):
        path = tmp_path / "sparse.txt"
        path.write_text("n=2\n# just one entry\n1 2 1 2 3.5\n")
        A = read_tensor(path)
        assert A.entries[0, 1, 0, 1] == 3.5
        assert np.sum(A.entries != 0) == 1

    def test_rejects_bad_lines(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("n=2\n1 2 3\n")
        with pytest.raises(ValueError):
            read_tensor(path)
        path.write_text("m=2\n")
        with pytest.raises(ValueError):
            read_tensor(path)
        path.write_text("n=2\n1 2 5 1 1.0\n")
        with pytest.raises(ValueError):
            read_tensor(path)


class TestGridExport:
    def test_row_count_and_header(self, tmp_path):
        u = random_vector_field(6, make_lattice(2, 2), decay=2.0)
        path = tmp_path / "u.csv"
        export_grid_csv(path, u, 6)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "x1,x2,v1,v2"
        assert len(lines) == 1 + 36

    def test_constant_scalar_values(self, tmp_path):
        lat = make_lattice(2, 1)
        c = np.zeros(lat.shape, np.complex128)
        c[lat.zero_index] = 2.25
        path = tmp_path / "c.csv"
        export_grid_csv(path, scalar_field(lat, c, is_real=True), 3)
        rows = path.read_text().strip().split("\n")[1:]
        for row in rows:
            assert row.endswith(",2.25")

    def test_complex_fields_export_re_im(self, tmp_path):
        lat = make_lattice(2, 1)
        c = np.zeros(lat.shape, np.complex128)
        c[lat.m + 1, lat.m] = 1.0  # not Hermitian, complex samples
        path = tmp_path / "z.csv"
        export_grid_csv(path, scalar_field(lat, c), 3)
        assert path.read_text().split("\n")[0] == "x1,x2,v1_re,v1_im"


class TestReport:
    def test_flat_layout_and_echo(self, tmp_path):
        path = tmp_path / "report.txt"
        write_report(
            path,
            [("residual", 1.25e-13), ("modes", 48)],
            config_echo=[("command", "stokes-solve"), ("s", 1.0)],
            history=[0.5, 0.0625],
        )
        text = path.read_text()
        lines = text.strip().split("\n")
        assert "config.command = stokes-solve" in lines
        assert "residual = 1.25e-13" in lines
        assert "modes = 48" in lines
        assert lines[-3] == "iteration,residual"
        assert lines[-2] == "1,0.5"
        assert lines[-1] == "2,0.0625"

    def test_seventeen_digit_floats(self, tmp_path):
        path = tmp_path / "r.txt"
        write_report(path, [("value", 1.0 / 3.0)])
        assert "0.33333333333333331" in path.read_text()
