import pytest
from fractions import Fraction

from outerspace import fixtures as FX
from outerspace.traintrack import find_train_track


@pytest.fixture(scope="session")
def fib():
    fs = FX.fib_system()
    return {
        "fs": fs,
        "phi": FX.fib_auto(fs),
        "swap": FX.swap_auto(fs),
        "rose": FX.fib_rose(fs=fs),
        "rose1": FX.fib_rose(lengths=(Fraction(1), Fraction(1)), fs=fs, name="rose1"),
        "theta": FX.fib_theta(fs=fs),
    }


@pytest.fixture(scope="session")
def fib_tt(fib):
    return find_train_track(fib["rose"], fib["phi"])


@pytest.fixture(scope="session")
def fib_tt_inv(fib):
    return find_train_track(fib["rose"], fib["phi"].inverse())


@pytest.fixture(scope="session")
def lolli():
    fs = FX.lolli_system()
    return {
        "fs": fs,
        "Xn": FX.lolli_point(fs=fs),
        "X": FX.circle_point(fs=fs),
        "twist": FX.lolli_twist(fs),
    }


@pytest.fixture(scope="session")
def zzz():
    fs = FX.zzz_system()
    return {"fs": fs, "tripod": FX.zzz_tripod(fs=fs), "rot": FX.zzz_rot(fs),
            "twist": FX.zzz_twist(fs)}


@pytest.fixture(scope="session")
def imprim():
    fs = FX.imprim_system()
    return {"fs": fs, "rose4": FX.imprim_rose(fs=fs), "auto": FX.imprim_auto(fs)}


@pytest.fixture(scope="session")
def fibz2():
    fs = FX.fibz2_system()
    return {"fs": fs, "zrose": FX.fibz2_rose(fs=fs),
            "zlolli": FX.fibz2_lollirose(fs=fs), "phi": FX.fibz2_auto(fs)}
