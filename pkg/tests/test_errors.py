"""
Tests des exceptions et des codes de sortie
"""
import pytest

from errors import (EXIT_NON_CONVERGENCE, EXIT_VALIDATION, ArgumentError, ConfigurationError, ConvergenceError,
                    ErrorCode, ErrorHandler, FitImpossibleError, ValidationRangeError)


def test_range_error_message():
    error = ValidationRangeError('dt', min_value=0, actual_value=-1.0)
    assert 'dt' in error.message
    assert str(error).startswith(f"[{ErrorCode.VALIDATION_RANGE_ERROR.value}]")
    assert error.to_dict()['type'] == 'ValidationRangeError'


@pytest.mark.parametrize('error, code', [
    (ArgumentError("ξ doit être > 0", field='xi'), EXIT_VALIDATION),
    (ConfigurationError('config', "Configuration invalide"), EXIT_VALIDATION),
    (FitImpossibleError('m-int'), EXIT_VALIDATION),
    (ConvergenceError("quad", partial_value=1.5), EXIT_NON_CONVERGENCE),
    (KeyError('x'), EXIT_VALIDATION),
    (FloatingPointError('overflow'), EXIT_NON_CONVERGENCE),
])
def test_exit_codes(error, code):
    assert ErrorHandler.exit_code_for(error) == code


def test_handle_error_reports():
    report = ErrorHandler.handle_error(ConvergenceError("quad", partial_value=1.5), context='kernel_lab')
    assert report['error_code'] == ErrorCode.CONVERGENCE_ERROR.value
    assert report['details']['partial_value'] == 1.5
    assert report['context'] == 'kernel_lab'
    assert report['exit_code'] == EXIT_NON_CONVERGENCE
    system = ErrorHandler.handle_error(RuntimeError('boom'))
    assert system['type'] == 'SystemError'
    assert 'traceback' in system['details']


def test_fit_error_names_condition():
    error = FitImpossibleError('m-int')
    assert error.condition == 'm-int'
    assert 'm-int' in ErrorHandler.format_user_message(error)
