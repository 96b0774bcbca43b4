"""JSON report schemas for solve and certify output."""

from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, NonNegativeInt, ValidationError, field_validator

from .chordal import ChordalNetwork, CliqueEdge, SpanningForest
from .errors import InputError
from .nodeset import NodeSet, intersection, sorted_nodesets
from .solve import Certificate, SolveResult

NodeList = List[NonNegativeInt]


def _as_nodeset(nodes: NodeList) -> NodeSet:
    return tuple(sorted(set(nodes)))


class ForestEdgeReport(BaseModel):
    u: NodeList
    v: NodeList
    separator: NodeList


class NetworkReport(BaseModel):
    n_vars: int = Field(ge=1)
    cliques: List[NodeList]
    forest: List[ForestEdgeReport] = Field(default_factory=list)
    separators: List[NodeList] = Field(default_factory=list)
    score: float

    @field_validator("cliques")
    @classmethod
    def cliques_nonempty(cls, value: List[NodeList]) -> List[NodeList]:
        if any(not c for c in value):
            raise ValueError("cliques must be nonempty")
        return value


class CertificateReport(BaseModel):
    passed: bool
    checks: Dict[str, bool]
    failures: Dict[str, str] = Field(default_factory=dict)


class SolveReport(BaseModel):
    network: NetworkReport
    method: str
    objective_real: float
    objective_int: Optional[int] = None
    scale_factor: Optional[int] = None
    certificate: CertificateReport
    stats: Dict[str, Any] = Field(default_factory=dict)


def network_report(net: ChordalNetwork, n_vars: int) -> NetworkReport:
    forest = [
        ForestEdgeReport(
            u=list(net.forest.nodes[e.u]),
            v=list(net.forest.nodes[e.v]),
            separator=list(e.label),
        )
        for e in net.forest.edges
    ]
    return NetworkReport(
        n_vars=n_vars,
        cliques=[list(c) for c in net.sorted_cliques()],
        forest=forest,
        separators=[list(s) for s in net.separators],
        score=float(net.score),
    )


def certificate_report(cert: Certificate) -> CertificateReport:
    return CertificateReport(passed=cert.passed, checks=cert.checks, failures=cert.failures)


def solve_report(
    result: SolveResult, n_vars: int, scale_factor: Optional[int] = None
) -> SolveReport:
    stats = {k: (round(v, 3) if isinstance(v, float) else v) for k, v in result.stats.items()}
    return SolveReport(
        network=network_report(result.network, n_vars),
        method=result.method,
        objective_real=result.objective_real,
        objective_int=result.objective_int,
        scale_factor=scale_factor,
        certificate=certificate_report(result.certificate),
        stats=stats,
    )


def parse_network_report(text: str) -> NetworkReport:
    """Accept either a full solve report or a bare network report.

    Raises:
        InputError when neither schema validates
    """
    try:
        return SolveReport.model_validate_json(text).network
    except ValidationError as solve_error:
        try:
            return NetworkReport.model_validate_json(text)
        except ValidationError:
            raise InputError(f"invalid network report: {solve_error}")


def network_from_report(report: NetworkReport) -> ChordalNetwork:
    """Rebuild a network exactly as reported, stored score included.

    Nothing is validated here beyond shape; forest endpoints missing from the
    clique list become extra forest nodes so certification can flag them.
    """
    cliques = [_as_nodeset(c) for c in report.cliques]
    endpoints = [(_as_nodeset(e.u), _as_nodeset(e.v)) for e in report.forest]
    nodes = sorted_nodesets(set(cliques) | {c for pair in endpoints for c in pair})
    index = {c: i for i, c in enumerate(nodes)}

    edges = []
    for a, b in endpoints:
        u, v = sorted((index[a], index[b]))
        label = intersection(nodes[u], nodes[v])
        edges.append(CliqueEdge(u, v, label, len(label)))
    edges.sort(key=lambda e: (e.u, e.v))

    return ChordalNetwork(
        cliques=frozenset(cliques),
        forest=SpanningForest(nodes=nodes, edges=tuple(edges)),
        separators=sorted_nodesets(_as_nodeset(s) for s in report.separators),
        score=report.score,
    )


def to_json(report: Union[SolveReport, NetworkReport, CertificateReport]) -> str:
    return report.model_dump_json(indent=2) + "\n"
