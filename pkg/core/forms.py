from django import forms
from django.core.exceptions import ValidationError

from symbolic.symbols import IDENTIFIER, RESERVED_NAMES


def _identifier(value, what):
    if not isinstance(value, str) or not IDENTIFIER.match(value):
        raise ValidationError(f"Invalid {what} name: {value!r}")
    if value in RESERVED_NAMES:
        raise ValidationError(f"'{value}' is reserved and cannot be used as a {what} name")
    return value


def _name_list(value, what):
    if value is None:
        return []
    if not isinstance(value, list):
        raise ValidationError(f'Expected a list of {what} names')
    names = [_identifier(item, what) for item in value]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise ValidationError(f"Duplicate {what} names: {', '.join(duplicates)}")
    return names


class ModelFileForm(forms.Form):
    """Validates a decoded model-file document before any expression is parsed"""

    name = forms.CharField(max_length=200)
    n = forms.IntegerField(min_value=1)
    k = forms.IntegerField(min_value=1)
    coordinates = forms.JSONField()
    parameters = forms.JSONField(required=False)
    lagrangian = forms.CharField(strip=True)
    function_atoms = forms.JSONField(required=False)
    invertible_atoms = forms.JSONField(required=False)

    def clean_coordinates(self):
        names = _name_list(self.cleaned_data.get('coordinates'), 'coordinate')
        if not names:
            raise ValidationError('At least one coordinate is required')
        return names

    def clean_parameters(self):
        return _name_list(self.cleaned_data.get('parameters'), 'parameter')

    def clean_invertible_atoms(self):
        return _name_list(self.cleaned_data.get('invertible_atoms'), 'atom')

    def clean_function_atoms(self):
        declarations = self.cleaned_data.get('function_atoms') or []
        if not isinstance(declarations, list):
            raise ValidationError('function_atoms must be a list of declarations')
        cleaned = []
        for declaration in declarations:
            if not isinstance(declaration, dict) or 'name' not in declaration:
                raise ValidationError('Each function atom needs at least a name')
            unknown = set(declaration) - {'name', 'arguments', 'rules', 'terminal'}
            if unknown:
                raise ValidationError(
                    f"Unknown keys in atom '{declaration['name']}': {', '.join(sorted(unknown))}"
                )
            name = _identifier(declaration['name'], 'atom')
            arguments = _name_list(declaration.get('arguments', []), 'argument')
            rules = declaration.get('rules') or {}
            if not isinstance(rules, dict) or not all(
                isinstance(variable, str) and isinstance(text, str) for variable, text in rules.items()
            ):
                raise ValidationError(f"Rules of atom '{name}' must map argument names to expressions")
            stray = sorted(set(rules) - set(arguments))
            if stray:
                raise ValidationError(f"Atom '{name}' has rules for non-arguments: {', '.join(stray)}")
            terminal = declaration.get('terminal', False)
            if not isinstance(terminal, bool):
                raise ValidationError(f"'terminal' of atom '{name}' must be true or false")
            cleaned.append({'name': name, 'arguments': arguments, 'rules': rules, 'terminal': terminal})
        names = [declaration['name'] for declaration in cleaned]
        if len(set(names)) != len(names):
            raise ValidationError('Function atoms must have distinct names')
        return cleaned

    def clean(self):
        cleaned_data = super().clean()
        n = cleaned_data.get('n')
        coordinates = cleaned_data.get('coordinates')
        if n is not None and coordinates is not None and n != len(coordinates):
            raise ValidationError(f'n is {n} but {len(coordinates)} coordinates are declared')

        atoms = {declaration['name'] for declaration in cleaned_data.get('function_atoms') or []}
        undeclared = [name for name in cleaned_data.get('invertible_atoms') or [] if name not in atoms]
        if undeclared:
            raise ValidationError(f"Invertible atoms are not declared: {', '.join(undeclared)}")

        taken = set(coordinates or []) | set(cleaned_data.get('parameters') or [])
        clashes = sorted(taken & atoms)
        if clashes:
            raise ValidationError(f"Names declared twice: {', '.join(clashes)}")
        return cleaned_data

    def first_error(self):
        for field, errors in self.errors.items():
            if field == '__all__':
                return errors[0]
            return f'{field}: {errors[0]}'
        return None
