"""Sublinear-query cake cutting with victims, in the Robertson-Webb model."""

from .cake import ONE, ZERO, Instance, Interval, PieceSet, Valuation, measure, rational
from .oracle import END, NO_SUCH_POINT, Oracle, QueryLedger, fragmented_query
from .protocols import Allocation, FairnessCertificate, approx_fair, certify, dc, failure_bound, pcut, victimize

__all__ = [
    "END",
    "NO_SUCH_POINT",
    "ONE",
    "ZERO",
    "Allocation",
    "FairnessCertificate",
    "Instance",
    "Interval",
    "Oracle",
    "PieceSet",
    "QueryLedger",
    "Valuation",
    "approx_fair",
    "certify",
    "dc",
    "failure_bound",
    "fragmented_query",
    "measure",
    "pcut",
    "rational",
    "victimize",
]
