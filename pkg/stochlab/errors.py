from typing import Optional


class StochlabError(Exception):
    """Basisklasse voor alle fouten van stochlab."""


class ConfigurationError(StochlabError, ValueError):
    """Ongeldige parameters of een ongeldig configuratiebestand."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"'{key}': "
        super().__init__(prefix + message)


class DomainError(StochlabError, ValueError):
    """Argument buiten het wiskundige domein (negatieve tijd, lege steekproef, ...)."""


class IsolatedOrigin(StochlabError, ValueError):
    """De oorsprong heeft graad 0 in de open subgraaf."""


class DisconnectedInterior(StochlabError, RuntimeError):
    """Een inwendige component van het Dirichlet-probleem raakt de rand niet."""


class DiagnosticError(StochlabError, RuntimeError):
    """Een schatter kan geen betekenisvol resultaat geven (geen tekenwissel, te weinig samples)."""
