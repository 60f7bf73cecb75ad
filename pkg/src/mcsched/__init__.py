"""Mixed-criticality mode-change analysis, simulation and proactive switching."""
