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

"""Flat key/value document parser.

Model and hardware descriptions are flat JSON objects: a single pair of
braces holding ``"key": value`` members, where values are numbers, strings,
booleans or null. ``#`` starts a comment that runs to the end of the line.
Nested objects and arrays are rejected by the lexer.
"""

import logging
from collections import namedtuple

from ply import yacc

from memwall.lexer import (  # pylint: disable=unused-import # noqa: F401
    lexer,
    tokens,
)
from memwall.errors import (
    DocumentSyntaxError,
    DuplicateField,
    InvalidFieldValue,
    MissingField,
    UnknownField,
)

__parser = None  # pylint: disable=invalid-name


Field = namedtuple("Field", "name value lineno")


class FieldSpec(namedtuple("FieldSpec", "kind required")):
    """Schema entry: expected kind of value and whether it is mandatory."""

    def __new__(cls, kind, required=True):
        """Initialize the namedtuple."""
        return super().__new__(cls, kind, required)

    def convert(self, field):
        """Check and convert the value of a parsed field."""
        value = field.value
        if self.kind == "count":
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidFieldValue(
                    field.lineno, field.name, value, "Expected integer"
                )
            return value
        if self.kind == "real":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidFieldValue(
                    field.lineno, field.name, value, "Expected number"
                )
            return value
        if self.kind == "text":
            if not isinstance(value, str):
                raise InvalidFieldValue(
                    field.lineno, field.name, value, "Expected string"
                )
            return value
        raise InvalidFieldValue(field.lineno, field.name, value, "No schema")


def p_document(p):  # noqa: D200,D205,D403,D400,D415
    """
    document : LBRACE members RBRACE
             | LBRACE RBRACE
    """
    p[0] = p[2] if len(p) == 4 else []


def p_members_single(p):  # noqa: D200,D403,D400,D415
    """
    members : member
    """
    p[0] = [p[1]]


def p_members_more(p):  # noqa: D200,D403,D400,D415
    """
    members : members COMMA member
    """
    p[0] = p[1] + [p[3]]


def p_member(p):  # noqa: D200,D403,D400,D415
    """
    member : STRING COLON value
    """
    logging.log(5, "Field:%d:%s=%r", p.lineno(1), p[1], p[3])
    p[0] = Field(p[1], p[3], p.lineno(1))


def p_value(p):  # noqa: D200,D205,D403,D400,D415
    """
    value : NUMBER
          | STRING
          | BOOLEAN
          | NULL
    """
    p[0] = p[1]


def p_error(p):
    """Abort parsing on the first syntax error."""
    if p:
        raise DocumentSyntaxError(p.lineno, f"Unexpected token:{p.value!r}")
    raise DocumentSyntaxError("EOF", "Unexpected end of document")


def parse_document(source):
    """Parse a flat document into an ordered list of fields."""
    global __parser  # pylint: disable=global-statement,invalid-name
    if __parser is None:
        __parser = yacc.yacc(start="document", debug=False, write_tables=False)
    return __parser.parse(source, lexer=lexer())


def read_fields(source, schema):
    """Parse a document and check it against a schema.

    Unknown keys are rejected so typos cannot silently fall back to
    defaults. Optional keys given as null are treated as absent.
    """
    values = {}
    seen = {}
    for field in parse_document(source):
        if field.name in seen:
            raise DuplicateField(field.lineno, field.name)
        seen[field.name] = field.lineno
        spec = schema.get(field.name)
        if spec is None:
            raise UnknownField(field.lineno, field.name)
        if field.value is None and not spec.required:
            continue
        values[field.name] = spec.convert(field)
    for name, spec in schema.items():
        if spec.required and name not in values:
            raise MissingField("EOF", name)
    return values
