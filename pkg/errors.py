"""
Système de gestion d'erreurs du laboratoire numérique
- Exceptions personnalisées par famille d'échec (validation, numérique, ajustement)
- Codes d'erreur standardisés et codes de sortie du processus
- Gestion centralisée des erreurs pour la ligne de commande
"""
import logging
import traceback
from typing import Optional, Dict, Any
from enum import Enum

logger = logging.getLogger(__name__)


class ErrorCode(Enum):
    """Codes d'erreur standardisés"""
    # Erreurs de validation
    VALIDATION_ERROR = "VAL_001"
    VALIDATION_RANGE_ERROR = "VAL_002"
    ARGUMENT_ERROR = "VAL_003"
    INSUFFICIENT_DATA = "VAL_004"
    NOT_APPLICABLE = "VAL_005"
    GRID_ERROR = "VAL_006"

    # Erreurs numériques
    OUT_OF_RANGE = "NUM_001"
    RESOLUTION_ERROR = "NUM_002"
    CONVERGENCE_ERROR = "NUM_003"

    # Erreurs d'ajustement
    FIT_IMPOSSIBLE = "FIT_001"

    # Erreurs d'entrées/sorties
    REPORT_ERROR = "IO_001"

    # Erreurs système
    SYSTEM_ERROR = "SYS_001"
    CONFIGURATION_ERROR = "SYS_002"


# Codes de sortie de la ligne de commande
EXIT_PASS = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_NON_CONVERGENCE = 3


class AppException(Exception):
    """Exception de base pour toutes les exceptions du laboratoire"""

    exit_code: int = EXIT_VALIDATION

    def __init__(
        self,
        message: str,
        error_code: ErrorCode = None,
        details: Dict[str, Any] = None,
        original_exception: Exception = None
    ):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        self.original_exception = original_exception
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Convertit l'exception en dictionnaire pour sérialisation"""
        return {
            'error_code': self.error_code.value if self.error_code else None,
            'message': self.message,
            'details': self.details,
            'type': self.__class__.__name__
        }

    def __str__(self):
        code_str = f"[{self.error_code.value}] " if self.error_code else ""
        return f"{code_str}{self.message}"


# ============================================================================
# EXCEPTIONS DE VALIDATION
# ============================================================================

class ValidationError(AppException):
    """Exception pour les erreurs de validation des entrées"""
    def __init__(self, message: str, field: str = None, details: Dict[str, Any] = None,
                 error_code: ErrorCode = ErrorCode.VALIDATION_ERROR):
        details = details or {}
        if field:
            details['field'] = field
        super().__init__(
            message=message,
            error_code=error_code,
            details=details
        )
        self.field = field


class ValidationRangeError(ValidationError):
    """Valeur hors de la plage admise"""
    def __init__(self, field: str, min_value: Any = None, max_value: Any = None, actual_value: Any = None):
        range_parts = []
        if min_value is not None:
            range_parts.append(f"minimum: {min_value}")
        if max_value is not None:
            range_parts.append(f"maximum: {max_value}")
        range_str = ", ".join(range_parts)

        message = f"Valeur hors plage pour '{field}' ({range_str})"
        if actual_value is not None:
            message += f" (valeur reçue: {actual_value})"

        super().__init__(
            message=message,
            field=field,
            details={'min_value': min_value, 'max_value': max_value, 'actual_value': actual_value},
            error_code=ErrorCode.VALIDATION_RANGE_ERROR
        )


class ArgumentError(ValidationError):
    """Préconditions d'une opération violées par ses arguments"""
    def __init__(self, message: str, field: str = None, details: Dict[str, Any] = None):
        super().__init__(message, field=field, details=details, error_code=ErrorCode.ARGUMENT_ERROR)


class InsufficientDataError(ValidationError):
    """Pas assez de points pour effectuer la vérification"""
    def __init__(self, required: int, actual: int, what: str = "grille"):
        super().__init__(
            f"Données insuffisantes pour {what}: {actual} point(s), minimum {required}",
            details={'required': required, 'actual': actual},
            error_code=ErrorCode.INSUFFICIENT_DATA
        )


class NotApplicableError(ValidationError):
    """Opération non définie pour ce modèle ou cette dimension"""
    def __init__(self, operation: str, reason: str):
        super().__init__(
            f"Opération '{operation}' non applicable: {reason}",
            details={'operation': operation},
            error_code=ErrorCode.NOT_APPLICABLE
        )


class GridError(ValidationError):
    """Grille périodique invalide"""
    def __init__(self, message: str, details: Dict[str, Any] = None):
        super().__init__(message, field='grid', details=details, error_code=ErrorCode.GRID_ERROR)


class OutOfRangeError(ValidationError):
    """Évaluation en dehors du domaine échantillonné ou admissible"""
    def __init__(self, message: str, value: Any = None, admissible: Any = None):
        super().__init__(
            message,
            details={'value': value, 'admissible': admissible},
            error_code=ErrorCode.OUT_OF_RANGE
        )


class ResolutionError(ValidationError):
    """Rayon ou échelle inférieur à la résolution de la grille"""
    def __init__(self, message: str, details: Dict[str, Any] = None):
        super().__init__(message, details=details, error_code=ErrorCode.RESOLUTION_ERROR)


# ============================================================================
# EXCEPTIONS NUMÉRIQUES ET D'AJUSTEMENT
# ============================================================================

class ConvergenceError(AppException):
    """Quadrature ou intégration non convergée dans le budget imparti"""

    exit_code = EXIT_NON_CONVERGENCE

    def __init__(self, message: str, partial_value: Optional[float] = None,
                 error_estimate: Optional[float] = None, details: Dict[str, Any] = None):
        details = details or {}
        details.update({'partial_value': partial_value, 'error_estimate': error_estimate})
        super().__init__(
            message=message,
            error_code=ErrorCode.CONVERGENCE_ERROR,
            details=details
        )
        self.partial_value = partial_value
        self.error_estimate = error_estimate


class FitImpossibleError(AppException):
    """Ajustement initial impossible: une condition structurelle n'est pas satisfaite"""
    def __init__(self, condition: str, message: str = None, details: Dict[str, Any] = None):
        if not message:
            message = f"Ajustement impossible (condition violée: {condition})"
        details = details or {}
        details['condition'] = condition
        super().__init__(
            message=message,
            error_code=ErrorCode.FIT_IMPOSSIBLE,
            details=details
        )
        self.condition = condition


# ============================================================================
# EXCEPTIONS SYSTÈME
# ============================================================================

class ConfigurationError(AppException):
    """Erreur de configuration"""
    def __init__(self, config_key: str = None, message: str = None, details: Dict[str, Any] = None):
        if not message:
            message = "Erreur de configuration"
            if config_key:
                message += f" (clé: {config_key})"
        details = details or {}
        if config_key:
            details['config_key'] = config_key
        super().__init__(
            message=message,
            error_code=ErrorCode.CONFIGURATION_ERROR,
            details=details
        )


class ReportError(AppException):
    """Erreur lors de l'écriture ou de la lecture des artefacts d'une exécution"""
    def __init__(self, message: str, path: str = None, original_exception: Exception = None):
        super().__init__(
            message=message,
            error_code=ErrorCode.REPORT_ERROR,
            details={'path': path},
            original_exception=original_exception
        )


# ============================================================================
# GESTIONNAIRE D'ERREURS CENTRALISÉ
# ============================================================================

class ErrorHandler:
    """Gestionnaire centralisé des erreurs"""

    @staticmethod
    def handle_error(exception: Exception, context: str = None) -> Dict[str, Any]:
        """
        Gère une exception et retourne un rapport d'erreur structuré

        Args:
            exception: Exception à gérer
            context: Contexte de l'erreur (expérience, opération)

        Returns:
            Dictionnaire avec les informations d'erreur
        """
        error_context = f" dans {context}" if context else ""
        if isinstance(exception, AppException):
            logger.error(f"Erreur{error_context}: {exception}")
            error_dict = exception.to_dict()
        else:
            logger.error(f"Erreur{error_context}: {exception}", exc_info=True)
            error_dict = {
                'error_code': ErrorCode.SYSTEM_ERROR.value,
                'message': str(exception),
                'details': {
                    'exception_type': exception.__class__.__name__,
                    'traceback': traceback.format_exc()
                },
                'type': 'SystemError'
            }

        if context:
            error_dict['context'] = context
        error_dict['exit_code'] = ErrorHandler.exit_code_for(exception)
        return error_dict

    @staticmethod
    def exit_code_for(exception: Exception) -> int:
        """Code de sortie du processus associé à une exception"""
        if isinstance(exception, AppException):
            return exception.exit_code
        if isinstance(exception, (ValueError, KeyError, TypeError)):
            return EXIT_VALIDATION
        return EXIT_NON_CONVERGENCE if isinstance(exception, FloatingPointError) else EXIT_VALIDATION

    @staticmethod
    def format_user_message(exception: Exception) -> str:
        """
        Formate un message d'erreur lisible pour l'utilisateur

        Args:
            exception: Exception à formater

        Returns:
            Message formaté
        """
        if isinstance(exception, AppException):
            return str(exception)
        elif isinstance(exception, ValueError):
            return f"Valeur invalide: {str(exception)}"
        elif isinstance(exception, KeyError):
            return f"Clé manquante: {str(exception)}"
        else:
            return f"Erreur inattendue: {type(exception).__name__}: {exception}"
