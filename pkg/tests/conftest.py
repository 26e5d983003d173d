"""Shared random-instance helpers; every test seeds its own generator."""

from __future__ import annotations

import numpy as np

from telecert import states


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def rand_complex(g: np.random.Generator, n: int, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    return g.standard_normal((n, m)) + 1j * g.standard_normal((n, m))


def rand_herm(g: np.random.Generator, n: int) -> np.ndarray:
    a = rand_complex(g, n)
    return (a + a.conj().T) / 2.0


def rand_psd(g: np.random.Generator, n: int) -> np.ndarray:
    a = rand_complex(g, n)
    return a @ a.conj().T


def rand_density(g: np.random.Generator, n: int) -> np.ndarray:
    p = rand_psd(g, n)
    return p / np.trace(p).real


def rand_pure(g: np.random.Generator, n: int) -> np.ndarray:
    v = g.standard_normal(n) + 1j * g.standard_normal(n)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def rand_unitary(g: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rand_complex(g, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_povm(g: np.random.Generator, dims: tuple, n_out: int) -> states.Povm:
    """POVM with full-rank random effects on a space with the given factors."""
    dim = 1
    for d in dims:
        dim *= d
    gs = [rand_complex(g, dim) for _ in range(n_out)]
    gs = [a @ a.conj().T for a in gs]
    total = sum(gs)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return states.Povm(tuple(inv_sqrt @ a @ inv_sqrt for a in gs), tuple(dims))
