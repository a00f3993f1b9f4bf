import sys
sys.path.insert(0, 'src'); sys.path.insert(0, '_scratch')
import numpy as np, cvxpy as cp
from gen import random_system, random_ellipsoid
from flexhull.subproblem import build_instance, _ReformulatedRelaxation

seed = 6; T = 1
sysr = random_system(seed, n_op=6, n_x=3, T=T)
Q, c = random_ellipsoid(seed, T)
inst = build_instance(sysr, Q, c, bounds_mode="tight")
rel = _ReformulatedRelaxation(inst)
print("is_dcp:", rel._prob.is_dcp(), "is_dpp:", rel._prob.is_dcp(dpp=True))
rel._lo.value = inst.lo; rel._hi.value = inst.hi
rel._sec1.value = inst.lo + inst.hi; rel._sec0.value = inst.lo * inst.hi
try:
    rel._prob.solve(solver="CLARABEL")
    print("clarabel status:", rel._prob.status, rel._prob.value)
except Exception as ex:
    print("clarabel raises:", type(ex).__name__, str(ex)[:200])
# narrower box mimicking deep nodes
mid = 0.5*(inst.lo+inst.hi)
lo = mid - 1e-5; hi = mid + 1e-5
rel._lo.value, rel._hi.value = lo, hi
rel._sec1.value, rel._sec0.value = lo+hi, lo*hi
try:
    rel._prob.solve(solver="CLARABEL")
    print("clarabel deep status:", rel._prob.status, rel._prob.value)
except Exception as ex:
    print("clarabel deep raises:", type(ex).__name__, str(ex)[:300])
