# This file is part of memwall
#
# Copyright (C) 2023 The memwall authors
#
# This software is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This software is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this software.  If not, see <https://www.gnu.org/licenses/>.

"""Memwall errors."""


class DocumentError(Exception):
    """Base class for model and hardware document errors."""

    def __init__(self, lineno, msg):
        """Initialize a document error."""
        self.lineno = lineno
        super().__init__(f"{self.__class__.__name__}:{lineno}:{msg}")


class InvalidCharacter(DocumentError):
    """Lexer invalid character."""

    def __init__(self, lineno, char):
        """Initialize error with detected invalid char."""
        super().__init__(lineno, f"Illegal character:{char}")


class DocumentSyntaxError(DocumentError):
    """A document does not follow the flat key/value grammar."""


class UnknownField(DocumentError):
    """A document holds a key the schema does not know."""

    def __init__(self, lineno, field):
        """Initialize error with the unknown field."""
        self.field = field
        super().__init__(lineno, f"Unknown field:{field}")


class DuplicateField(DocumentError):
    """A key was given more than once."""

    def __init__(self, lineno, field):
        """Initialize error with the repeated field."""
        self.field = field
        super().__init__(lineno, f"Duplicate field:{field}")


class MissingField(DocumentError):
    """A required key is absent."""

    def __init__(self, lineno, field):
        """Initialize error with the missing field."""
        self.field = field
        super().__init__(lineno, f"Missing field:{field}")


class InvalidFieldValue(DocumentError):
    """A field holds a value of the wrong type."""

    def __init__(self, lineno, field, value, msg="Invalid value"):
        """Initialize error with the offending field and value."""
        self.field = field
        super().__init__(lineno, f"{msg}:{field}:{value!r}")


class ValidationError(ValueError):
    """An object violates one of its invariants."""


class InvalidDimension(ValidationError):
    """A kernel or model dimension is not strictly positive."""

    def __init__(self, name, value):
        """Initialize error with the offending dimension."""
        super().__init__(f"Invalid dimension:{name}={value!r}")


class InvalidState(ValidationError):
    """A decoder step was requested for an impossible cache state."""


class DomainError(ValidationError):
    """An argument is outside the domain of a formula."""


class NoThreshold(DomainError):
    """A perfect hit rate never lets DRAM dominate."""

    def __init__(self):
        """Initialize a No Threshold error."""
        super().__init__("hit_rate=1 is never DRAM dominated")


class UnknownPreset(LookupError):
    """A preset model name is not known."""

    def __init__(self, name):
        """Initialize error with the unknown name."""
        super().__init__(f"Unknown preset:{name}")


class UnknownDevice(LookupError):
    """A hardware device name is not known."""

    def __init__(self, name):
        """Initialize error with the unknown device."""
        super().__init__(f"Unknown device:{name}")


class TrendFileError(Exception):
    """A malformed row in a trend CSV."""

    def __init__(self, lineno, msg):
        """Initialize error naming the bad line."""
        self.lineno = lineno
        super().__init__(f"TrendFileError:{lineno}:{msg}")


class UnknownMetric(LookupError):
    """A requested metric has no series in the trend data."""

    def __init__(self, name):
        """Initialize error with the unknown metric."""
        super().__init__(f"Unknown metric:{name}")


class DegenerateFit(ValueError):
    """A series cannot be fitted."""

    def __init__(self, metric, msg="fewer than 2 distinct years"):
        """Initialize error with the degenerate metric."""
        self.metric = metric
        super().__init__(f"Degenerate fit:{metric}:{msg}")


class UndecodableInput(ValueError):
    """An input file is not UTF-8 text."""

    def __init__(self, path, offset):
        """Initialize error with the file and the first bad byte."""
        self.path = path
        super().__init__(f"UndecodableInput:{path}:not UTF-8 at byte {offset}")


class CountOverflow(ArithmeticError):
    """A count does not fit a signed 64-bit integer."""

    def __init__(self, name, value):
        """Initialize an overflow error."""
        super().__init__(f"Count overflow:{name}:{value}")
