"""
Capacity of the energy harvesting channel over Markov policies
"""

from .ascent import AscentSearch, ascent_capacity
from .brute_force import BruteForceSearch, brute_force_capacity
from .policy import (
    ClassRate, Policy, RateReport, antipodal_policy, c_infinity, c_no_buffer,
    evaluate_policy, greedy_policy, random_policy, spend_all_policy, zero_policy
)
from .search_base import PolicySearch

__all__ = [
    'AscentSearch', 'BruteForceSearch', 'ClassRate', 'Policy', 'PolicySearch',
    'RateReport', 'antipodal_policy', 'ascent_capacity', 'brute_force_capacity',
    'c_infinity', 'c_no_buffer', 'evaluate_policy', 'greedy_policy',
    'random_policy', 'spend_all_policy', 'zero_policy',
]
