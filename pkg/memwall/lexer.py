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

"""Model and hardware document lexer."""

import json
import logging

from ply import lex
from ply.lex import TOKEN

from memwall.errors import InvalidCharacter, DocumentSyntaxError

# Characters to be ignored by lexer.
t_ignore = " \t\r"  # pylint: disable=invalid-name

KEYWORDS = {"true": True, "false": False, "null": None}

tokens = (
    "LBRACE",
    "RBRACE",
    "COLON",
    "COMMA",
    "STRING",
    "NUMBER",
    "BOOLEAN",
    "NULL",
)

t_LBRACE = r"\{"  # pylint: disable=invalid-name
t_RBRACE = r"\}"  # pylint: disable=invalid-name
t_COLON = r":"  # pylint: disable=invalid-name
t_COMMA = r","  # pylint: disable=invalid-name


@TOKEN(r"[_a-zA-Z][_a-zA-Z0-9]*")
def t_BOOLEAN(token):  # pylint: disable=invalid-name
    """Extract a keyword (true, false or null)."""
    if token.value not in KEYWORDS:
        raise DocumentSyntaxError(
            token.lexer.lineno, f"Bare word:{token.value}"
        )
    if token.value == "null":
        token.type = "NULL"
    token.value = KEYWORDS[token.value]
    logging.log(3, "%s:%d:%r", token.type, token.lexer.lineno, token.value)
    return token


@TOKEN(r"-?\d+([.]\d+)?([eE][+-]?\d+)?")
def t_NUMBER(token):  # pylint: disable=invalid-name
    """Extract a number, keeping integers exact."""
    text = token.value
    if any(c in text for c in ".eE"):
        token.value = float(text)
    else:
        token.value = int(text)
    logging.log(3, "NUMBER:%d:%r", token.lexer.lineno, token.value)
    return token


@TOKEN(r'"([^"\\\n]|\\.)*"')
def t_STRING(token):  # pylint: disable=invalid-name
    """Extract a string, resolving JSON escapes."""
    try:
        token.value = json.loads(token.value)
    except ValueError as error:
        raise DocumentSyntaxError(
            token.lexer.lineno, f"Invalid string:{token.value}"
        ) from error
    logging.log(3, "STRING:%d:%r", token.lexer.lineno, token.value)
    return token


@TOKEN(r"[#][^\n]*")
def t_COMMENT(token):  # pylint: disable=invalid-name
    """Ignore comments."""
    logging.log(3, "Comment:%d:'%s'", token.lexer.lineno, token.value)


@TOKEN(r"\n+")
def t_newline(token):
    """Count new lines."""
    token.lexer.lineno += len(token.value)


def lexer():
    """Create a new lexer object."""
    return lex.lex()


def t_error(tokenizer):
    """Report lexer error."""
    raise InvalidCharacter(tokenizer.lexer.lineno, tokenizer.value[0])
