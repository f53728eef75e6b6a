"""Evans-function tools for internal solitary waves in a stratified channel."""
from .stratification import Stratification, critical_speed, mode_eigenvalue, mode_function
from .profile import WaveProfile, kdv_coefficients, kdv_soliton
from .truncation import TruncatedOperator, asymptotic_block

__version__ = "0.1.0"
