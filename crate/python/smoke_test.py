"""Smoke test for the seaice_tri_py extension.

Build and install first:

    pip install --no-build-isolation -e crates/py

then run `python python/smoke_test.py`.
"""

import math

import seaice_tri_py as st


def close(x, y, tol):
    return abs(x - y) <= tol * max(1.0, abs(y))


def main():
    mesh = st.TriMesh.periodic(16, 16, 1.0)
    assert mesh.n_cells == 2 * mesh.n_vertices
    assert mesh.n_edges == 3 * mesh.n_vertices

    # plane-wave measurement agrees with the closed form
    k, l = 4 * math.pi / 16, 0.0
    assert mesh.is_commensurate(k, l)
    num = mesh.numeric_symbol("vertex-lumped", k, l)
    ana = st.symbol("vertex-lumped", k, l)
    dev = max(abs(a - b) for ra, rb in zip(num, ana) for a, b in zip(ra, rb))
    assert dev < 1e-10, dev

    # long waves recover the continuum pair
    kv = 0.05
    ev = sorted(x.real for x in st.eigenvalues("vertex-lumped", kv * math.cos(math.pi / 6), kv * math.sin(math.pi / 6)))
    cont = sorted(st.continuous_eigenvalues(kv * math.cos(math.pi / 6), kv * math.sin(math.pi / 6), 1.0, 1.0))
    for x, y in zip(ev, cont):
        assert close(x, y, 0.01), (x, y)

    table = st.sweep_branches("cell-v", math.pi / 6, samples=32)
    assert table.count("kernel") == 2
    assert table.count("physical") == 2
    assert table.to_csv().startswith("ka,direction,branch,class,re,im\n")

    edge0 = st.sweep_branches("edge-cr", math.pi / 6, samples=32, eps=0.0)
    assert edge0.zero_branches() > 0

    r_cell = st.max_lambda2("cell-corrected", n=32) / st.max_lambda2("vertex-lumped", n=32)
    assert 3.0 <= r_cell <= 4.0, r_cell

    checker = [1.0] * mesh.n_vertices + [-1.0] * mesh.n_vertices
    assert close(mesh.noise_metric(checker), 2.0, 1e-12)

    cfg = st.Config("length_m = 32000\na_m = 4000\nduration_s = 1800\noutput_every_s = 600\nn_evp = 20")
    cfg.set("grid", "cd")
    (air, ocean) = st.cyclone_forcing(16000.0, 16000.0, 0.0, cfg)
    assert ocean == (0.0, 0.0)
    diag = st.run_benchmark(cfg)
    assert diag.abort is None
    assert diag.time_s == [0.0, 600.0, 1200.0, 1800.0]
    assert all(s >= 0.0 for s in diag.shear)
    assert diag.to_csv().splitlines()[0] == "time_s,kinetic_energy,noise_metric,stability_margin,max_speed"

    print("seaice_tri_py smoke test passed")


if __name__ == "__main__":
    main()
