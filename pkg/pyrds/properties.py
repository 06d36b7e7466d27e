from __future__ import annotations

import logging
from typing import Dict, List

import numpy as np
import pandas as pd

from pyrds.estimators import homophily_by_category
from pyrds.graph import AttributedGraph

logger = logging.getLogger(__name__)


class NetworkProperties():
    """
    Measures the structural properties that drive RDS estimates: group proportions and homophily per
    attribute category, degrees and component sizes. Mixing is reported for the undirected view
    (giant reciprocal component, reciprocal edges only) and, when one-way edges exist, for the directed
    view (giant strongly connected component, every edge).
    """
    def __init__(self, graph: AttributedGraph):
        """Initialize a NetworkProperties object

        Parameters
        ----------
        graph : AttributedGraph
            Network to describe
        """
        self.graph = graph
        _ = self.measure_properties()

    def measure_properties(self) -> NetworkProperties:
        """Measure every property

        Returns
        -------
        NetworkProperties
            returns self
        """
        self.measure_components()
        self.measure_degrees()
        self.measure_mixing()
        return self

    @property
    def views(self) -> List[str]:
        return list(self._views)

    def measure_components(self) -> NetworkProperties:
        g = self.graph
        self.components = pd.Series({
            'nodes': g.n_nodes,
            'edges': g.n_edges,
            'reciprocal_edges': int(g.is_reciprocal.sum()),
            'irreciprocal_share': g.irreciprocal_fraction(),
            'giant_reciprocal_component': len(g.giant_reciprocal_component()),
            'giant_strongly_connected_component': len(g.giant_strongly_connected_component()),
        }, dtype=object)
        self._views: Dict[str, AttributedGraph] = {'undirected': g.restrict_to_giant(directed=False)}
        if g.irreciprocal_fraction() > 0:
            self._views['directed'] = g.restrict_to_giant(directed=True)
        return self

    def measure_degrees(self) -> NetworkProperties:
        rows = {}
        for mode in ('reciprocal', 'out', 'in'):
            d = self.graph.degrees(mode)
            if len(d) == 0:
                continue
            rows[mode] = {'mean': float(d.mean()), 'median': float(np.median(d)),
                          'min': int(d.min()), 'max': int(d.max())}
        self.degrees = pd.DataFrame.from_dict(rows, orient='index')
        self.degrees.index.name = 'mode'
        return self

    def measure_mixing(self) -> NetworkProperties:
        """Proportion P* and homophily H of every attribute category in every view. Categories whose
        homophily is undefined (the group covers the whole view or has no ties) get NaN and are flagged."""
        rows = []
        for view, g in self._views.items():
            directed = view == 'directed'
            for attribute in g.attribute_names:
                values = g.attribute_values(attribute)
                h = homophily_by_category(g, attribute, directed=directed) if g.n_nodes else pd.Series(dtype=float)
                for cat in g.categories(attribute):
                    hv = float(h.get(cat, np.nan))
                    rows.append({'view': view, 'attribute': attribute, 'category': cat,
                                 'P': float(np.mean(values == cat)) if g.n_nodes else np.nan,
                                 'H': hv, 'H_undefined': bool(np.isnan(hv))})
        self.mixing = pd.DataFrame(rows, columns=['view', 'attribute', 'category', 'P', 'H', 'H_undefined'])
        n_undefined = int(self.mixing['H_undefined'].sum())
        if n_undefined:
            logger.info('homophily undefined for %d attribute categories', n_undefined)
        return self

    def summary(self) -> pd.DataFrame:
        """Proportions and homophilies laid out one row per (attribute, category), one column pair per view"""
        if self.mixing.empty:
            return self.mixing
        table = self.mixing.pivot_table(index=['attribute', 'category'], columns='view', values=['P', 'H'],
                                        dropna=False, sort=False)
        table.columns = [f'{stat}_{view}' for stat, view in table.columns]
        return table

    def to_text(self) -> str:
        parts = ['components', self.components.to_string(), '', 'degrees', self.degrees.to_string()]
        if not self.mixing.empty:
            mixing = self.mixing.copy()
            mixing['H'] = [('undefined' if u else f'{h:.3f}') for h, u in zip(mixing['H'], mixing['H_undefined'])]
            mixing['P'] = mixing['P'].map(lambda p: f'{p:.4f}')
            parts += ['', 'proportions and homophily',
                      mixing.drop(columns='H_undefined').to_string(index=False)]
        return '\n'.join(parts)
