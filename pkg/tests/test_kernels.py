import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from convpow import _kernels as K

finite = st.floats(0.0, 1e3, allow_nan=False)


@given(arrays(np.float64, st.integers(1, 60), elements=finite),
       arrays(np.float64, st.integers(1, 60), elements=finite), st.integers(1, 130))
def test_conv_trunc_agrees(a, b, n):
    ref = K.conv_trunc_numpy(a, b, n)
    got = K.conv_trunc(a, b, n)
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-300)
    assert got.shape == (n,)


@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(0.0, 1.0)), st.integers(1, 80))
def test_renewal_density_agrees(f, n):
    f = f / (f.sum() + 1.0)
    np.testing.assert_allclose(K.renewal_density(f, n), K.renewal_density_numpy(f, n), rtol=1e-12)


@given(st.integers(0, 5000), st.floats(0.0, 1e7))
def test_laguerre_agrees(j, t):
    assert K.laguerre_log(j, t) == pytest.approx(K.laguerre_log_numpy(j, t), rel=1e-13, abs=1e-13)


def test_numba_flag_switches_backend():
    code = "from convpow import _kernels as K; print(K.USING_NUMBA, K.conv_trunc is K.conv_trunc_numpy)"
    env = dict(os.environ, CONVPOW_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         timeout=120).stdout.split()
    assert out == ["False", "True"]


def test_numpy_fallback_end_to_end():
    code = ("from convpow import *; import math;"
            "t = convolve_power(discretize(PowerLaw(1.0, 1.0), 1e-2, 3.0), 3);"
            "print(t.log_value(3.0))")
    outs = []
    for flag in ("1", "0"):
        env = dict(os.environ, CONVPOW_DISABLE_NUMBA=flag)
        outs.append(float(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                         text=True, timeout=300, check=True).stdout))
    assert outs[0] == pytest.approx(outs[1], rel=1e-12)
    assert abs(outs[0] - math.log(4.5)) < 2e-2
