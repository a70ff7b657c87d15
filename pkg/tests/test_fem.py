import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughlap import exterior as ext
from roughlap import fem
from roughlap import geometry as geo
from roughlap import mesh as ms
from roughlap.errors import AssemblyError
from roughlap.iterative import block_inverse_iteration


def square(h=0.25):
    return ms.triangulate(geo.build_square(), h)


def one_triangle(axisymmetric=False):
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return ms.Mesh(v, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]), np.zeros(3, int),
                   axisymmetric=axisymmetric)


def test_reference_stiffness():
    K = fem.assemble_stiffness(one_triangle()).toarray()
    np.testing.assert_allclose(K, 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]), atol=1e-15)


def test_reference_mass():
    M = fem.assemble_mass(one_triangle()).toarray()
    np.testing.assert_allclose(M, np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24, atol=1e-15)


def test_stiffness_kernel_and_rank():
    m = square(0.25)
    K = fem.assemble_stiffness(m).toarray()
    np.testing.assert_allclose(K, K.T, atol=0)
    np.testing.assert_allclose(K @ np.ones(m.nv), 0, atol=1e-13)
    ev = np.linalg.eigvalsh(K)
    assert ev[0] > -1e-12
    assert int(np.sum(ev > 1e-10)) == m.nv - 1


def test_mass_and_shifted_stiffness_definite():
    m = ms.triangulate(geo.build_lshape(), 0.25)
    K, M = fem.assemble_stiffness(m).toarray(), fem.assemble_mass(m).toarray()
    assert np.linalg.eigvalsh(M)[0] > 0
    assert np.linalg.eigvalsh(K + M)[0] > 0


def test_symsparse_stores_upper_triangle():
    K = fem.assemble_stiffness(square(0.5))
    A = K.tocsr()
    assert abs(A - A.T).max() == 0
    assert np.all(K.rows <= K.cols)
    pairs = set(zip(K.rows.tolist(), K.cols.tolist()))
    assert len(pairs) == len(K.rows)


def test_degenerate_triangle():
    v = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    m = ms.Mesh(v, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]), np.zeros(3, int))
    with pytest.raises(AssemblyError, match="zero area"):
        fem.assemble_stiffness(m)


@pytest.mark.parametrize("dom,area", [(geo.build_square(), 1.0), (geo.build_lshape(), 0.75),
                                      (geo.build_rect_union(3), None)])
def test_mass_total_is_area(dom, area):
    m = ms.triangulate(dom, 0.05)
    total = np.ones(m.nv) @ (fem.assemble_mass(m) @ np.ones(m.nv))
    assert total == pytest.approx(area if area is not None else m.area(), abs=1e-12)


def test_axisymmetric_mass_cylinder_shell():
    import oracles

    m = ms.triangulate(geo.build_rectangle(1, 2, 0, 1), 0.1).with_axisymmetric()
    total = np.ones(m.nv) @ (fem.assemble_mass(m) @ np.ones(m.nv))
    assert total == pytest.approx(oracles.CYLINDER_SHELL_VOLUME, abs=1e-10)


def test_axisymmetric_mass_is_exact_for_linear_r():
    # integral of r * r over the reference triangle = 1/12
    m = one_triangle(axisymmetric=True)
    M = fem.assemble_mass(m)
    r = m.vertices[:, 0]
    assert r @ (M @ np.ones(3)) == pytest.approx(2 * math.pi / 12, rel=1e-14)


def test_boundary_mass_perimeter():
    m = square(0.1)
    B = fem.assemble_boundary_mass(m, 1.0)
    assert np.ones(m.nv) @ (B @ np.ones(m.nv)) == pytest.approx(4.0, abs=1e-12)
    assert fem.assemble_boundary_mass(m, 0.0).total() == 0


def test_boundary_mass_per_marker_annulus():
    m = ms.annulus_mesh(0.5, 1.0, 64, 8)
    B = fem.assemble_boundary_mass(m, fem.RobinCoefficient(per_marker={0: 1.0, 1: 2.0}))
    expect = m.boundary_length(0) + 2 * m.boundary_length(1)
    assert np.ones(m.nv) @ (B @ np.ones(m.nv)) == pytest.approx(expect, abs=1e-12)


def test_negative_robin_rejected():
    with pytest.raises(AssemblyError, match="Robin coefficient must be nonnegative"):
        fem.assemble_boundary_mass(square(), -1.0)


def test_loads():
    m = square(0.1)
    assert fem.assemble_load(m, 1.0).sum() == pytest.approx(1.0, abs=1e-13)
    assert np.all(fem.assemble_load(m, lambda x, y: 0 * x) == 0)
    errs = []
    for h in (0.1, 0.05):
        b = fem.assemble_load(ms.triangulate(geo.build_square(), h),
                              lambda x, y: 2 * math.pi ** 2 * np.sin(math.pi * x) * np.sin(math.pi * y))
        errs.append(abs(b.sum() - 8.0))
    assert errs[0] < 0.05 and errs[1] < errs[0] / 3


def test_norm_examples():
    m = square(0.05)
    K, M, B1 = fem.assemble_stiffness(m), fem.assemble_mass(m), fem.assemble_boundary_mass(m)
    n = fem.norms(np.ones(m.nv), K, M, B1)
    assert n.l2 == pytest.approx(1.0, abs=1e-12)
    assert n.energy == pytest.approx(0.0, abs=1e-6)
    assert n.trace_l2 == pytest.approx(2.0, abs=1e-12)
    x = m.vertices[:, 0]
    nx = fem.norms(x, K, M, B1)
    assert nx.energy == pytest.approx(1.0, abs=1e-12)
    assert nx.l2 == pytest.approx(1 / math.sqrt(3), abs=5e-3)
    n2 = fem.norms(2 * x, K, M, B1)
    for a, b in zip(n2[:4], nx[:4]):
        assert a == pytest.approx(2 * b, rel=1e-13)
    B = fem.assemble_boundary_mass(m, 3.0)
    nr = fem.norms(x, K, M, B1, B)
    assert nr.robin == pytest.approx(math.sqrt(1 + 3 * nx.trace_l2 ** 2), rel=1e-12)
    with pytest.raises(AssemblyError, match="dimension mismatch"):
        fem.norms(np.ones(m.nv + 1), K, M, B1)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=25, max_size=25), st.floats(0.1, 10))
def test_norm_homogeneity(values, c):
    m = square(0.25)
    K, M, B1 = fem.assemble_stiffness(m), fem.assemble_mass(m), fem.assemble_boundary_mass(m)
    u = np.array(values)
    a, b = fem.norms(c * u, K, M, B1), fem.norms(u, K, M, B1)
    for x, y in zip(a[:4], b[:4]):
        assert x == pytest.approx(c * y, rel=1e-9, abs=1e-12)


def test_norm_equivalence_stable_under_refinement():
    base = ms.disk_base_mesh()
    vals = []
    for level in (3, 4):
        m = ms.refine_n(base, level)
        K, M, B = fem.assemble_stiffness(m), fem.assemble_mass(m), fem.assemble_boundary_mass(m, 1.0)
        eig = block_inverse_iteration(K + M, K + B, 1)
        vals.append(1.0 / eig.values[0])  # smallest eigenvalue of (K+B) relative to (K+M)
    assert vals[0] > 0 and vals[1] > 0
    assert abs(vals[1] / vals[0] - 1) < 0.05


def test_complex_assembly_reuses_pattern():
    m = square(0.25)
    K, M = fem.assemble_stiffness(m), fem.assemble_mass(m)
    A = K - M * (1.0 + 0.5j)
    assert np.iscomplexobj(A.vals)
    np.testing.assert_array_equal(A.rows, K.rows)
    np.testing.assert_allclose(A.toarray(), K.toarray() - (1 + 0.5j) * M.toarray(), atol=1e-15)


def test_field_length_checked():
    m = square(0.5)
    assert fem.Field(m, np.zeros(m.nv) + 0j).scalar == "complex"
    with pytest.raises(AssemblyError):
        fem.Field(m, np.zeros(m.nv + 1))


def test_l3_trace_inequality_on_rotated_rect_union():
    m = ext.rotated_domain_mesh(ext.rotated_rect_union(4), 0.05)
    fields = ext.random_axisymmetric_fields(m, 200, seed=7)
    violations = 0
    for j in range(fields.shape[1]):
        lhs, rhs = ext.l3_inequality(m, fields[:, j])
        violations += lhs > rhs
    assert violations == 0


def test_rotated_mesh_rejects_axis_contact():
    from roughlap.errors import GeometryError

    with pytest.raises(GeometryError, match="off the axis"):
        ext.rotated_domain_mesh(geo.build_rect_union(2), 0.1)
