"""Analytic reduced-density expressions, evaluated independently of the oracle."""

from .discrepancy import DiscrepancyRecord, check_against_oracle, closedform_trajectory
from .model1 import model1_rho_diag
from .model2 import Model2Intermediates, model2_I_element, model2_intermediates, model2_rho
from .model3 import Model3Intermediates, model3_E_polynomial, model3_intermediates, model3_omega, model3_rho
from .model4 import model4_M_element, model4_rho

__all__ = [
    "DiscrepancyRecord", "check_against_oracle", "closedform_trajectory",
    "model1_rho_diag", "Model2Intermediates", "model2_I_element", "model2_intermediates",
    "model2_rho", "Model3Intermediates", "model3_E_polynomial", "model3_intermediates",
    "model3_omega", "model3_rho", "model4_M_element", "model4_rho",
]
