"""Exact symbolic checkers for n-ary bracket structures over the rationals.

Submodules: kernel (rationals, sparse polynomials, multi-indices), nlie
(structure-constant algebras), rinehart (anchored module structures and their
maps), nambu (polynomial multi-vector fields), algebroid (anchored bundles
and linear duality), cli (declarative check runner).
"""

from .kernel import (MultiIndex, PolyDerivation, Rat, SparsePoly,
                     canonical_multiindex, parse_poly, poly_partial,
                     poly_substitute, poly_to_str, derivation_apply)
from .nlie import (NLieAlgebra, RepTable, adjoint_representation,
                   check_fundamental_identity, check_induced_leibniz,
                   check_representation, induced_leibniz, nlie_bracket, v4)
from .rinehart import (AlgebraMap, ModuleMapCo, ModuleMapForward, NLieRinehart,
                       PsiSumElement, check_comorphism, check_intertwine,
                       check_leibniz_rinehart, check_morphism, check_rinehart,
                       d_operator, direct_sum, dual_form, dual_form_scalar,
                       graph_check, induced_leibniz_rinehart, preserves_ideal,
                       psi_sum_bracket, psi_sum_compatible, restrict,
                       rinehart_anchor, rinehart_bracket, tangent_model,
                       zero_structure)
from .nambu import (NambuTensor, PolyMap, PolySubmanifold, canonical_tensor,
                    check_coisotropic, check_nambu_fi, check_nambu_map,
                    check_nambu_relation, check_nambu_submanifold,
                    compose_linear_relations, coordinate_subspace,
                    graph_of_map, graph_submanifold, hamiltonian_vf,
                    nambu_bracket)
from .algebroid import (BundleMapCo, BundleMapForward, NLieAlgebroid, Subbundle,
                        check_algebroid, check_annihilator,
                        check_comorphism_algebroid, check_duality_comorphism,
                        check_duality_morphism, check_morphism_algebroid,
                        check_subalgebroid, dual_linear_nambu)
from .report import CheckResult, CrossCheckError, PreconditionError, Witness

__version__ = "0.1.0"
