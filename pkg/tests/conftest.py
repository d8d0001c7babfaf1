import sys
from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

from mvbasis.term import App, Var
from mvbasis.theory import builtin_signatures

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("ci", max_examples=60, deadline=None, derandomize=True)
settings.load_profile("ci")

VARS = ("x", "y", "z", "u")


def terms(sig, max_leaves=12, var_names=VARS):
    """Random terms over ``sig`` (a Signature)."""
    consts = [op for op, k in sig.ops if k == 0]
    leaves = st.sampled_from(var_names).map(Var)
    if consts:
        leaves = leaves | st.sampled_from(consts).map(App)
    ops = [(op, k) for op, k in sig.ops if k > 0]

    def extend(children):
        return st.one_of(*[st.tuples(*[children] * k).map(lambda a, op=op: App(op, a))
                           for op, k in ops])

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@pytest.fixture(scope="session")
def sigs():
    return builtin_signatures()


@pytest.fixture(scope="session")
def corpus():
    from mvbasis.proof import bundled_scripts, check_corpus
    return check_corpus(bundled_scripts())
