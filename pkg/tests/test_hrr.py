import numpy as np
import pytest

from cogkit import hrr
from cogkit.hrr import (
    SymbolLexicon,
    bind,
    cleanup,
    cosine,
    identity_vector,
    involution,
    permute,
    random_symbol,
    superpose,
    unbind,
)


def conv_direct(a, b):
    """Reference O(d^2) circular convolution sum; the normative oracle."""
    d = len(a)
    out = np.zeros(d)
    for j in range(d):
        for k in range(d):
            out[j] += a[k] * b[(j - k) % d]
    return out


def test_random_symbol_deterministic():
    v1 = random_symbol("A", 4, seed=7)
    v2 = random_symbol("A", 4, seed=7)
    assert np.array_equal(v1, v2)
    assert not np.array_equal(v1, random_symbol("B", 4, seed=7))
    assert not np.array_equal(v1, random_symbol("A", 4, seed=8))


def test_random_symbol_invalid_dim():
    with pytest.raises(ValueError):
        random_symbol("A", 0)


def test_random_symbol_norm_statistics():
    # Variance 1/d per component -> mean squared norm 1.0 +/- 0.02 over 10k draws.
    d = 256
    sq = [np.dot(v, v) for v in (random_symbol(f"s{i}", d, seed=1) for i in range(10_000))]
    assert abs(np.mean(sq) - 1.0) < 0.02


def test_random_symbols_quasi_orthogonal():
    d = 1024
    cs = [
        abs(cosine(random_symbol(f"a{i}", d, seed=2), random_symbol(f"b{i}", d, seed=2)))
        for i in range(1000)
    ]
    assert np.mean(cs) < 0.1


def test_bind_small_case():
    # Frozen from the direct convolution sum.
    got = bind([1.0, 2.0, 3.0], [0.0, 1.0, 0.0])
    assert np.allclose(got, [3.0, 1.0, 2.0], atol=1e-12)
    assert np.allclose(got, conv_direct([1, 2, 3], [0, 1, 0]), atol=1e-12)


@pytest.mark.parametrize("d", [3, 16, 257])
def test_bind_identity_element(d):
    a = random_symbol("a", d)
    assert np.allclose(bind(a, identity_vector(d)), a, atol=1e-12)


def test_bind_commutative():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.normal(size=64), rng.normal(size=64)
        assert np.allclose(bind(a, b), bind(b, a), rtol=1e-9, atol=1e-12)


def test_bind_algebra_laws():
    rng = np.random.default_rng(1)
    a, b, c = rng.normal(size=128), rng.normal(size=128), rng.normal(size=128)
    # associativity
    assert np.allclose(bind(bind(a, b), c), bind(a, bind(b, c)), rtol=1e-9)
    # distributivity over superposition
    assert np.allclose(
        bind(a, superpose([b, c])), superpose([bind(a, b), bind(a, c)]), rtol=1e-9
    )
    # bilinearity in a scalar
    assert np.allclose(bind(2.5 * a, b), 2.5 * bind(a, b), rtol=1e-9)


@pytest.mark.parametrize("d", [3, 64, 256])
def test_bind_matches_direct_sum(d):
    # Transform-based binding must agree with the O(d^2) sum to 1e-10 relative.
    rng = np.random.default_rng(d)
    for _ in range(100):
        a, b = rng.normal(size=d), rng.normal(size=d)
        ref = conv_direct(a, b)
        got = bind(a, b)
        assert np.linalg.norm(got - ref) <= 1e-10 * max(np.linalg.norm(ref), 1.0)


def test_bind_dimension_mismatch():
    with pytest.raises(ValueError):
        bind([1.0, 2.0], [1.0, 2.0, 3.0])


def test_involution_small_case():
    assert np.array_equal(involution([1.0, 2.0, 3.0]), [1.0, 3.0, 2.0])
    assert np.array_equal(involution([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])


def test_involution_is_involution_and_isometry():
    a = random_symbol("x", 97)
    assert np.array_equal(involution(involution(a)), a)
    # Component multiset is preserved exactly, hence the norm is too.
    assert np.array_equal(np.sort(involution(a)), np.sort(a))


def test_unbind_exact_for_cyclic_shift():
    got = unbind([3.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    assert np.allclose(got, [1.0, 2.0, 3.0], atol=1e-12)


def test_unbind_identity_exact():
    a = random_symbol("a", 32)
    assert np.allclose(unbind(bind(a, identity_vector(32)), identity_vector(32)), a, atol=1e-12)


def test_unbind_recovers_bound_operand():
    d = 512
    cs = []
    for i in range(100):
        a = hrr.normalize(random_symbol(f"a{i}", d, seed=3))
        b = hrr.normalize(random_symbol(f"b{i}", d, seed=3))
        cs.append(cosine(unbind(bind(a, b), b), a))
    assert np.mean(cs) >= 0.6


def test_superpose_basic():
    assert np.array_equal(superpose([[1.0, 0.0], [0.0, 1.0]]), [1.0, 1.0])
    a = np.array([3.0, 4.0])
    assert np.allclose(superpose([a], normalize=True), a / 5.0)
    with pytest.raises(ValueError):
        superpose([])
    with pytest.raises(ValueError):
        superpose([[0.0, 0.0]], normalize=True)


def test_superpose_preserves_similarity_to_members():
    d = 512
    wins = 0
    for i in range(100):
        a = random_symbol(f"a{i}", d, seed=4)
        b = random_symbol(f"b{i}", d, seed=4)
        c = random_symbol(f"c{i}", d, seed=4)
        s = superpose([a, b])
        wins += cosine(s, a) > cosine(s, c)
    assert wins >= 95


def test_permute():
    assert np.array_equal(permute([1.0, 2.0, 3.0], 1), [3.0, 1.0, 2.0])
    a = random_symbol("a", 17)
    assert np.array_equal(permute(a, 0), a)
    assert np.array_equal(permute(a, 17), a)
    assert np.array_equal(permute(permute(a, 5), -5), a)


def test_cosine():
    a = random_symbol("a", 64)
    assert cosine(a, a) == pytest.approx(1.0)
    assert cosine(a, -a) == pytest.approx(-1.0)
    assert cosine([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        cosine(a, np.zeros(64))


def test_cleanup_exact_member():
    lex = SymbolLexicon(64, seed=5, names=["A", "B", "C"])
    top = cleanup(lex["A"], lex, k=1)
    assert top[0][0] == "A"
    assert top[0][1] == pytest.approx(1.0)


def test_cleanup_truncation_and_errors():
    lex = SymbolLexicon(32, seed=6, names=["A", "B", "C"])
    ranked = cleanup(lex["A"], lex, k=10)
    assert len(ranked) == 3
    with pytest.raises(ValueError):
        cleanup(lex["A"], SymbolLexicon(32), k=1)
    with pytest.raises(ValueError):
        cleanup(np.zeros(32), lex, k=1)


def test_cleanup_scale_invariant():
    lex = SymbolLexicon(128, seed=7, names=[f"s{i}" for i in range(10)])
    probe = superpose([lex["s3"], 0.3 * lex["s7"]])
    r1 = [n for n, _ in cleanup(probe, lex, k=10)]
    r2 = [n for n, _ in cleanup(37.5 * probe, lex, k=10)]
    assert r1 == r2


def test_cleanup_recovers_unbound_symbol():
    # 50-symbol lexicon at d=1024: unbinding then cleanup lands on the bound
    # symbol in at least 99/100 trials.
    d = 1024
    lex = SymbolLexicon(d, seed=8, names=[f"s{i}" for i in range(50)])
    rng = np.random.default_rng(8)
    hits = 0
    for _ in range(100):
        ia, ib = rng.choice(50, size=2, replace=False)
        names = lex.names()
        a, b = lex[names[ia]], lex[names[ib]]
        hits += cleanup(unbind(bind(a, b), b), lex, k=1)[0][0] == names[ia]
    assert hits >= 99


def test_lexicon_roundtrip_text():
    lex = SymbolLexicon(48, seed=11, names=["alpha", "beta", "gamma"])
    text = lex.export_text()
    back = SymbolLexicon.import_text(text)
    assert back.names() == lex.names()
    assert np.array_equal(back.matrix(), lex.matrix())
    with pytest.raises(ValueError):
        SymbolLexicon.import_text("")
    with pytest.raises(ValueError):
        SymbolLexicon.import_text("a\t8\t1\nb\t16\t1\n")
