import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from sandglass.errors import DomainError, MeshError
from sandglass.geometry import (
    DesignSpec,
    Mesh,
    Realization,
    build_vertices,
    check_closed,
    classify_fold,
    dihedral_angles,
    dof_count,
    is_intersection_free,
    self_intersections,
    squared_edge_lengths,
    volume,
)
from sandglass.origami import develop, origami_spec


def distances(mesh, pairs):
    V = mesh.vertices
    return np.array([np.sum((V[i] - V[j]) ** 2) for i, j in pairs])


def spec3():
    return DesignSpec.sandglass(3, 1.0, 1.0, 1.0)


configs = st.tuples(
    st.integers(3, 8),
    st.floats(-2, 2, allow_nan=False),
    st.floats(-2, 2, allow_nan=False),
    st.floats(-2, 2, allow_nan=False),
)


class TestDesignSpec:
    def test_derived_constants(self):
        sp = DesignSpec.sandglass(4, 0.7, 0.3, 0.2)
        assert sp.c == pytest.approx(math.cos(math.pi / 4))
        assert sp.c**2 + sp.s**2 == pytest.approx(1.0, abs=1e-15)
        assert sp.R == pytest.approx(1 / math.sqrt(2))
        assert sp.W == pytest.approx(1.8)
        assert sp.is_sandglass

    @pytest.mark.parametrize("kw", [dict(n=2), dict(Q2=0.0), dict(Q3=-1.0), dict(Q1=float("nan"))])
    def test_rejects_invalid(self, kw):
        args = dict(n=3, Q1=1.0, Q2=1.0, Q3=1.0, Q4=1.0) | kw
        with pytest.raises(DomainError):
            DesignSpec(**args)

    def test_origami_flag_is_checked(self):
        with pytest.raises(DomainError):
            DesignSpec.sandglass(3, 1.0, 3.0, 1.1, origami=True)
        assert DesignSpec.sandglass(3, 1.0, 3.0, 1.0, origami=True).origami


class TestVertices:
    def test_flat_circle(self):
        R = 1 / math.sqrt(3)
        m = build_vertices(spec3(), Realization(0.0, 0.0, R, spec3()))
        V = m.vertices[: 4 * 3]
        assert np.allclose(np.linalg.norm(V[:, :2], axis=1), R, atol=1e-15)
        assert np.allclose(V[:, 2], 0.0)

    @settings(max_examples=60, deadline=None)
    @given(configs)
    def test_unit_skeleton(self, cfg):
        n, H, h, r = cfg
        sp = DesignSpec.sandglass(n, 1.0, 1.0, 1.0)
        m = build_vertices(sp, Realization(H, h, r, sp))
        L = m.edge_lengths("skeleton")
        assert np.allclose(L, 1.0, atol=1e-12)

    def test_b0d0_equals_b0d1(self):
        sp = DesignSpec.sandglass(4, 1.0, 1.0, 1.0)
        m = build_vertices(sp, Realization(0.37, -0.21, 0.55, sp))
        n = 4
        B0, D0, D1 = n, 3 * n, 3 * n + 1
        d = distances(m, [(B0, D0), (B0, D1)])
        assert d[0] == pytest.approx(d[1], abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(configs)
    def test_edge_class_coherence(self, cfg):
        n, H, h, r = cfg
        sp = DesignSpec.sandglass(n, 1.0, 1.0, 1.0)
        m = build_vertices(sp, Realization(H, h, r, sp))
        for label in ("L1", "L2", "L3", "L4"):
            L = m.edge_lengths(label)
            assert len(L) == 2 * n
            assert np.ptp(L) < 1e-12 * max(1.0, L.max())
        assert m.edge_lengths("L1") == pytest.approx(m.edge_lengths("L4"), abs=1e-12)

    def test_rotation_symmetry(self):
        n = 5
        sp = DesignSpec.sandglass(n, 1.0, 1.0, 1.0)
        V = build_vertices(sp, Realization(0.4, 0.1, 0.3, sp)).vertices[: 4 * n]
        t = 2 * math.pi / n
        rot = np.array([[math.cos(t), -math.sin(t), 0], [math.sin(t), math.cos(t), 0], [0, 0, 1]])
        W = V @ rot.T
        for ring in range(4):
            block = V[ring * n : (ring + 1) * n]
            assert np.allclose(W[ring * n : (ring + 1) * n], np.roll(block, -1, axis=0), atol=1e-14)

    def test_face_and_edge_counts(self):
        n = 6
        m = build_vertices(DesignSpec.sandglass(n, 1, 1, 1), Realization(0.5, 0.1, 0.4, DesignSpec.sandglass(n, 1, 1, 1)))
        assert m.vertices.shape == (4 * n + 2, 3)
        assert len(m.faces) == 8 * n
        labels = [e[2] for e in m.edges]
        for label in ("skeleton", "L1", "L2", "L3", "L4"):
            assert labels.count(label) == 2 * n
        check_closed(m)


class TestSquaredLengths:
    @settings(max_examples=80, deadline=None)
    @given(configs)
    def test_closed_forms_match_vertex_distances(self, cfg):
        n, H, h, r = cfg
        sp = DesignSpec.sandglass(n, 1.0, 1.0, 1.0)
        real = Realization(H, h, r, sp)
        m = build_vertices(sp, real)
        S = squared_edge_lengths(sp, real)
        # B0D0, B0C1, D0C1 computed directly
        d = distances(m, [(n, 3 * n), (n, 2 * n + 1), (3 * n, 2 * n + 1)])
        assert np.allclose(S, d, atol=1e-12 * max(1.0, d.max()))

    def test_realization_roundtrip(self, generic):
        spec, real = generic
        assert squared_edge_lengths(spec, real) == pytest.approx((spec.Q1, spec.Q2, spec.Q3), abs=1e-9)

    def test_waist_on_skeleton_circle(self):
        # r = R and h = -H put C1 on top of B0
        sp = spec3()
        S1, S2, S3 = squared_edge_lengths(sp, Realization(0.3, -0.3, sp.R, sp))
        assert S2 == pytest.approx(0.0, abs=1e-15)
        assert S1 == pytest.approx(2 * sp.R**2 * (1 - sp.c) + 0.36, abs=1e-15)
        assert S3 == pytest.approx(2 * sp.R**2 * (1 - sp.c) + 0.36, abs=1e-15)


class TestVolume:
    def test_unit_cube(self, cube):
        assert volume(cube) == pytest.approx(1.0, abs=1e-15)

    def test_open_mesh_rejected(self, cube):
        m = Mesh(0, cube.vertices, cube.faces[:-1], [])
        with pytest.raises(MeshError):
            volume(m)

    def test_convex_states_match_hull(self):
        # every configuration whose inner dihedrals are all <= pi bounds a convex solid
        sp = DesignSpec.sandglass(6, 1.0, 1.0, 1.0)
        checked = 0
        for H in np.linspace(0.1, 1.5, 5):
            for h in np.linspace(-1, 1, 5):
                for r in np.linspace(0.2, 2, 7):
                    m = build_vertices(sp, Realization(H, h, r, sp))
                    ang = np.array(list(dihedral_angles(m).values()))
                    if np.all(np.isfinite(ang)) and np.all(ang <= math.pi + 1e-9):
                        assert volume(m) == pytest.approx(ConvexHull(m.vertices).volume, rel=1e-12)
                        checked += 1
        assert checked >= 10

    def test_translation_invariant(self, snap3):
        m = build_vertices(snap3.spec, snap3.open)
        shifted = Mesh(m.n, m.vertices + np.array([0.3, -1.7, 2.2]), m.faces, m.edges)
        assert volume(shifted) == pytest.approx(volume(m), abs=1e-13)

    def test_octahedron(self, octahedron):
        assert volume(octahedron) == pytest.approx(4.0 / 3.0, abs=1e-15)

    def test_mirror_flips_sign_only(self, snap3):
        m = build_vertices(snap3.spec, snap3.open)
        mm = build_vertices(snap3.spec, snap3.open.mirror())
        assert volume(mm) == pytest.approx(-volume(m), abs=1e-14)
        assert volume(m) > 0

    def test_snapping_pair_changes_volume(self, snap3):
        v_open = volume(build_vertices(snap3.spec, snap3.open))
        v_closed = volume(build_vertices(snap3.spec, snap3.closed))
        assert abs(v_open - v_closed) > 1e-3


class TestDihedral:
    def test_cube_edges(self, cube):
        ang = dihedral_angles(cube)
        vals = np.array(list(ang.values()))
        # face diagonals are flat, cube edges are right angles
        assert np.all(np.isclose(vals, math.pi / 2) | np.isclose(vals, math.pi))
        assert np.sum(np.isclose(vals, math.pi / 2)) == 12

    def test_flat_development_is_flat(self):
        sp = origami_spec(4, 1.0, 0.8)
        dev = develop(sp)
        # embed one strip cell in the plane z = 0 as an open sheet
        pts, faces = [], []
        for tri in dev.cell_triangles(0) + dev.cell_triangles(1):
            idx = []
            for p in tri:
                key = tuple(np.round(p, 12))
                if key not in pts:
                    pts.append(key)
                idx.append(pts.index(key))
            faces.append(idx)
        V = np.array([[x, y, 0.0] for x, y in pts])
        ang = dihedral_angles(Mesh(0, V, np.array(faces), []), reference="faces", require_closed=False)
        assert len(ang) >= 11
        assert np.allclose(list(ang.values()), math.pi, atol=1e-12)

    def test_closed_state_fold_edge(self, snap3):
        sp, real = snap3.spec, snap3.closed
        n = sp.n
        ang = dihedral_angles(build_vertices(sp, real))
        d0c1 = ang[(2 * n + 1, 3 * n)]
        assert min(abs(d0c1), abs(d0c1 - math.pi)) < 1e-6

    def test_open_state_not_flat(self, snap3):
        ang = dihedral_angles(build_vertices(snap3.spec, snap3.open))
        belt = [v for (a, b), v in ang.items() if a < 4 * 3 and b < 4 * 3]
        assert np.min(np.abs(np.array(belt) - math.pi)) > 1e-3

    def test_mirror_invariant_multiset(self, snap3):
        a = sorted(dihedral_angles(build_vertices(snap3.spec, snap3.open)).values())
        b = sorted(dihedral_angles(build_vertices(snap3.spec, snap3.open.mirror())).values())
        assert np.allclose(a, b, atol=1e-12)

    def test_classify(self):
        assert classify_fold(math.pi + 0.1) == "mountain"
        assert classify_fold(math.pi - 0.1) == "valley"
        assert classify_fold(math.pi) == "flat"

    def test_degenerate_face_reported(self):
        sp = spec3()
        m = build_vertices(sp, Realization(0.0, 0.0, sp.R, sp))
        ang = dihedral_angles(m, reference="faces")
        assert any(math.isnan(v) for v in ang.values())


class TestSelfIntersections:
    def test_octahedron_clean(self, octahedron):
        assert self_intersections(octahedron) == []

    def test_open_state_clean(self, snap3):
        assert self_intersections(build_vertices(snap3.spec, snap3.open)) == []

    def test_closed_state_touching(self, snap3):
        contacts = self_intersections(build_vertices(snap3.spec, snap3.closed))
        assert contacts
        assert all(c.touching for c in contacts)
        assert is_intersection_free(contacts)

    def test_penetration_detected(self):
        # two triangles crossing each other
        V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.2, 0.2, -0.5], [0.3, 0.2, 0.5], [0.2, 0.3, 0.5]], float)
        m = Mesh(0, V, np.array([[0, 1, 2], [3, 4, 5]]), [])
        contacts = self_intersections(m)
        assert len(contacts) == 1 and not contacts[0].touching
        assert not is_intersection_free(contacts)

    def test_mirror_same_status(self, snap3):
        for real in (snap3.open, snap3.closed):
            a = self_intersections(build_vertices(snap3.spec, real))
            b = self_intersections(build_vertices(snap3.spec, real.mirror()))
            assert [(c.face_a, c.face_b, c.touching) for c in a] == [(c.face_a, c.face_b, c.touching) for c in b]


@pytest.mark.parametrize("n,expected", [(3, 0), (4, -2), (5, -4), (6, -6)])
def test_dof_count(n, expected):
    assert dof_count(n) == expected
