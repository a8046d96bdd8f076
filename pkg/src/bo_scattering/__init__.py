"""Direct scattering transform for the Benjamin-Ono equation.

Computes Jost functions, discrete spectrum, phase constants and the
continuous-spectrum coefficients of a real decaying potential, checks
their relations and asymptotics, and cross-validates their time evolution
against a pseudo-spectral solver.
"""
from .grid_transforms import (Grid, Potential, SampledFunction, cauchy_project,
                              cauchy_project_line, family_potential, fourier_forward,
                              fourier_inverse, gaussian, hilbert_transform, plane_wave,
                              zero_potential)
from .kernels import CutoffChi, SpectralPoint, eval_G, eval_G0, eval_G00, eval_Gtilde, eval_l
from .fredholm import (IllConditioned, NearEigenvalue, NoConvergence, NotInRegime,
                       SolverError, solve_largek, solve_m1, solve_me)
from .modified_jost import (classify_genericity, reconstruct_m1, reconstruct_me, solve_m1_mod,
                            solve_me_mod)
from .spectrum import EigenPair, build_Lu, discrete_spectrum, eigen_data, phase_constant
from .scattering import (ScatteringData, TransformConfig, compute_beta, compute_f, compute_Gamma,
                         direct_transform, verify_relations)
from .asymptotics import check_k0, check_kinf, recover_potential
from .evolution import BlowupDetected, EvolutionConfig, crossvalidate, evolve_data, pde_step

__version__ = "0.1.0"
