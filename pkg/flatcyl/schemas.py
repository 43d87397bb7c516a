"""
Schémas de validation Marshmallow pour les entrées et les rapports.

Les nombres complexes circulent sous forme de paires [re, im].
"""
from marshmallow import Schema, ValidationError, fields, validate, validates_schema

from .metric_core import DOMAIN_KINDS


COMMANDS = ["curvature", "equivariance", "beltrami", "solve", "develop",
            "geodesic", "strip", "classify", "count", "pipeline"]

METRIC_KINDS = ["expression", "grid", "catalogue"]

CATALOGUE_DENSITIES = ["constant", "hyperbolic-disc", "upper-half-plane", "flat-annulus", "flat-band"]


class ComplexField(fields.Field):
    """Nombre complexe <-> [re, im] ; accepte aussi un réel ou une chaîne Python ("1+2j")."""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        value = complex(value)
        return [float(value.real), float(value.imag)]

    def _deserialize(self, value, attr, data, **kwargs):
        try:
            if isinstance(value, (list, tuple)):
                if len(value) != 2:
                    raise ValueError("expected [re, im]")
                return complex(float(value[0]), float(value[1]))
            if isinstance(value, str):
                return complex(value.replace(" ", "").replace("i", "j"))
            return complex(value)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Invalid complex number {value!r}: {e}")


class ParameterField(fields.Field):
    """Valeur scalaire de rapport : complexe -> [re, im], entiers et réels numpy -> natifs."""

    def _serialize(self, value, attr, obj, **kwargs):
        if isinstance(value, complex):
            return [float(value.real), float(value.imag)]
        if hasattr(value, "item"):
            value = value.item()
            if isinstance(value, complex):
                return [float(value.real), float(value.imag)]
        return value


# ============================================================================
# Entrées
# ============================================================================

class DomainSchema(Schema):
    """Domaine d'une densité donnée par formule ou par catalogue."""
    kind = fields.Str(required=True, validate=validate.OneOf(DOMAIN_KINDS))
    n = fields.Int(required=False, validate=validate.Range(min=8))
    radius = fields.Float(required=False, validate=validate.Range(min=0, min_inclusive=False))
    center = ComplexField(required=False)
    inner = fields.Float(required=False)
    outer = fields.Float(required=False)
    x_min = fields.Float(required=False)
    x_max = fields.Float(required=False)
    y_min = fields.Float(required=False)
    y_max = fields.Float(required=False)

    @validates_schema
    def validate_bounds(self, data, **kwargs):
        """Vérifie que les bornes requises par le type de domaine sont présentes."""
        required = {
            "disc": ["radius"],
            "annulus": ["inner", "outer"],
            "rectangle-grid": ["x_min", "x_max", "y_min", "y_max"],
            "upper-half-plane": ["x_min", "x_max", "y_min", "y_max"],
        }[data["kind"]]
        missing = [name for name in required if name not in data]
        if missing:
            raise ValidationError(f"Domain kind {data['kind']!r} requires {missing}", field_name="kind")


class GridHeaderSchema(Schema):
    """En-tête d'une grille de log rho."""
    nx = fields.Int(required=True, validate=validate.Range(min=8))
    ny = fields.Int(required=True, validate=validate.Range(min=8))
    x0 = fields.Float(required=True)
    y0 = fields.Float(required=True)
    h = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))


class MetricDefinitionSchema(Schema):
    """Fichier de définition de métrique."""
    kind = fields.Str(required=True, validate=validate.OneOf(METRIC_KINDS))
    formula = fields.Str(required=False)
    name = fields.Str(required=False, validate=validate.OneOf(CATALOGUE_DENSITIES))
    value = fields.Float(required=False)
    path = fields.Str(required=False)
    header = fields.Nested(GridHeaderSchema, required=False)
    domain = fields.Nested(DomainSchema, required=False)

    @validates_schema
    def validate_kind(self, data, **kwargs):
        kind = data["kind"]
        if kind == "expression" and not ("formula" in data and "domain" in data):
            raise ValidationError("Expression metrics need 'formula' and 'domain'", field_name="kind")
        if kind == "catalogue" and not ("name" in data and "domain" in data):
            raise ValidationError("Catalogue metrics need 'name' and 'domain'", field_name="kind")
        if kind == "grid" and not ("path" in data and "header" in data):
            raise ValidationError("Grid metrics need 'path' and 'header'", field_name="kind")


class JobConfigSchema(Schema):
    """Configuration d'un job CLI (fichier --config et options fusionnés)."""
    command = fields.Str(required=True, validate=validate.OneOf(COMMANDS))
    output_dir = fields.Str(required=False)

    metric = fields.Str(required=False)
    tensor = fields.Str(required=False)
    generators = fields.Str(required=False)
    deck = fields.Str(required=False)

    grid_size = fields.Int(required=False, validate=validate.Range(min=8))
    tolerance = fields.Float(required=False, validate=validate.Range(min=0, min_inclusive=False))
    max_iters = fields.Int(required=False, validate=validate.Range(min=0))
    normalize = fields.List(ComplexField(), required=False, validate=validate.Length(min=2, max=3))
    flat_tol = fields.Float(required=False, validate=validate.Range(min=0, min_inclusive=False))

    step = fields.Float(required=False, validate=validate.Range(min=0, min_inclusive=False))
    duration = fields.Float(required=False, validate=validate.Range(min=0, min_inclusive=False))
    horizon = fields.Float(required=False, validate=validate.Range(min=0, min_inclusive=False))
    start = ComplexField(required=False)
    direction = ComplexField(required=False)
    starts = fields.List(fields.List(ComplexField(), validate=validate.Length(equal=2)),
                         required=False, validate=validate.Length(equal=2))

    word_bound = fields.Int(required=False, validate=validate.Range(min=4))
    z0 = ComplexField(required=False)
    slit = fields.Bool(required=False)
    genus = fields.Int(required=False, validate=validate.Range(min=2))
    radius = fields.Float(required=False, validate=validate.Range(min=0, min_inclusive=False))

    @validates_schema
    def validate_inputs(self, data, **kwargs):
        """Vérifie la présence des entrées nécessaires à chaque commande."""
        needs = {
            "curvature": ["metric"],
            "equivariance": ["metric", "deck"],
            "beltrami": ["tensor"],
            "solve": ["tensor"],
            "develop": ["metric", "z0"],
            "geodesic": ["metric", "start", "direction", "duration"],
            "strip": ["metric", "starts", "duration"],
            "classify": ["generators"],
            "count": ["generators", "genus"],
            "pipeline": ["metric", "deck", "z0", "genus"],
        }[data["command"]]
        missing = [name for name in needs if name not in data]
        if missing:
            raise ValidationError(f"Command {data['command']!r} requires {missing}", field_name="command")


# ============================================================================
# Rapports
# ============================================================================

class IsometryReportSchema(Schema):
    lam = ComplexField(required=True)
    a = ComplexField(required=True)
    turns = fields.Method("dump_turns")

    def dump_turns(self, obj):
        return None if obj.turns is None else str(obj.turns)


class ClassificationReportSchema(Schema):
    """Rapport de classification : cas, paramètres, normalisateur, mots témoins."""
    case = fields.Str(required=True)
    case_number = fields.Int(required=True)
    label = fields.Str(required=True)
    family = fields.Str(allow_none=True)
    parameters = fields.Dict(keys=fields.Str(), values=ParameterField())
    conjugator = fields.Nested(IsometryReportSchema, required=True)
    evidence = fields.List(fields.Str())
    confidence = fields.Str(required=True, validate=validate.OneOf(["exact", "numerical"]))


class PushforwardReportSchema(Schema):
    source = fields.Method("dump_source")
    image = fields.Nested(IsometryReportSchema)
    residual = fields.Float()
    samples = fields.Int()

    def dump_source(self, obj):
        M = obj.source
        return [[float(complex(c).real), float(complex(c).imag)] for c in (M.a, M.b, M.c, M.d)]


class HomotopyBoundReportSchema(Schema):
    """Rapport de borne sur les classes d'homotopie."""
    case = fields.Int(required=True)
    label = fields.Str(required=True)
    alpha = fields.Float(allow_none=True)
    a = ComplexField(allow_none=True)
    r = fields.Float(allow_none=True)
    bound_radius = fields.Float(allow_none=True)
    directions = fields.List(fields.List(fields.Int()))
    per_direction = fields.Int(required=True)
    covering_factor = fields.Int(required=True)
    total = fields.Int(required=True)
    component_multiplier = fields.Int(required=True)
    contradiction = fields.Bool()


class FlatStripReportSchema(Schema):
    """Certificat de bande plate."""
    alpha = fields.Float(required=True)
    frame_origin = ComplexField()
    frame_direction = ComplexField()
    max_curvature = fields.Float()
    witness = ComplexField(allow_none=True)
    horizon = fields.Float()
    tol = fields.Float()


class ErrorReportSchema(Schema):
    """Bloc d'erreur d'un rapport d'échec."""
    error = fields.Str(required=True)
    module = fields.Str(required=True)
    message = fields.Str(required=True)
