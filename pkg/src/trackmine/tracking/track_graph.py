"""Track graph using a NetworkX DiGraph.

Vertices are segment ids (with the Segment stored as node data), edges
point from an earlier segment to the later segment it was matched with.
Every vertex has in-degree and out-degree at most one, so weakly connected
components are simple paths.
"""

import logging
from collections.abc import Iterable

import networkx as nx

from trackmine.tracking.models import Segment, Track

logger = logging.getLogger(__name__)


class TrackGraph:
    """Segments seen so far plus the cross-frame matches between them."""

    def __init__(self) -> None:
        self.graph = nx.DiGraph()
        self._by_frame: dict[int, list[int]] = {}

    def add_segments(self, segments: Iterable[Segment]) -> None:
        """Add vertices; re-adding an existing id is an error."""
        for seg in segments:
            if self.graph.has_node(seg.id):
                raise ValueError(f"Segment {seg.id} already in graph")
            self.graph.add_node(seg.id, segment=seg)
            self._by_frame.setdefault(seg.frame, []).append(seg.id)

    def add_edge(self, pred_id: int, succ_id: int) -> None:
        """Link two segments, keeping the path structure intact."""
        pred = self.segment(pred_id)
        succ = self.segment(succ_id)
        if succ.frame <= pred.frame:
            raise ValueError(
                f"Edge {pred_id}->{succ_id} goes backwards in time ({pred.frame} -> {succ.frame})"
            )
        if pred.class_name != succ.class_name:
            raise ValueError(
                f"Edge {pred_id}->{succ_id} joins classes {pred.class_name!r} and {succ.class_name!r}"
            )
        if self.graph.out_degree(pred_id) > 0:
            raise ValueError(f"Segment {pred_id} already has a successor")
        if self.graph.in_degree(succ_id) > 0:
            raise ValueError(f"Segment {succ_id} already has a predecessor")
        self.graph.add_edge(pred_id, succ_id)

    def segment(self, segment_id: int) -> Segment:
        return self.graph.nodes[segment_id]["segment"]

    def segments_in_frame(self, frame: int) -> list[Segment]:
        return [self.segment(i) for i in self._by_frame.get(frame, [])]

    def has_successor(self, segment_id: int) -> bool:
        return self.graph.out_degree(segment_id) > 0

    def successor(self, segment_id: int) -> int | None:
        succ = list(self.graph.successors(segment_id))
        return succ[0] if succ else None

    def vertices(self) -> list[Segment]:
        """All segments ordered by (frame, id)."""
        return sorted(
            (data["segment"] for _, data in self.graph.nodes(data=True)),
            key=lambda s: (s.frame, s.id),
        )

    @property
    def edges(self) -> set[tuple[int, int]]:
        return set(self.graph.edges())

    @property
    def vertex_count(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def edge_count(self) -> int:
        return self.graph.number_of_edges()

    @property
    def last_frame(self) -> int | None:
        return max(self._by_frame) if self._by_frame else None

    def paths(self) -> list[list[int]]:
        """Connected components as frame-ordered segment-id lists.

        Ordered by first frame, then first segment id.
        """
        result: list[list[int]] = []
        for head in self.graph.nodes:
            if self.graph.in_degree(head) > 0:
                continue
            path = [head]
            node = self.successor(head)
            while node is not None:
                path.append(node)
                node = self.successor(node)
            result.append(path)
        result.sort(key=lambda p: (self.segment(p[0]).frame, p[0]))
        return result

    def to_tracks(self) -> list[Track]:
        """Paths as Track objects with dense ids in first-appearance order."""
        tracks = []
        for i, path in enumerate(self.paths()):
            segs = [self.segment(sid) for sid in path]
            tracks.append(
                Track(
                    id=i,
                    class_name=segs[0].class_name,
                    segments=path,
                    frames=[s.frame for s in segs],
                )
            )
        return tracks
