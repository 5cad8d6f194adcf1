import pytest

from semlabel.corpus import (
    Attribute,
    DataSource,
    SemanticLabel,
    UNKNOWN,
    build_corpus,
)


def column(source: str, name: str, values: list[str]) -> Attribute:
    return Attribute(name=name, values=tuple(values), source_name=source)


def make_source(name: str, columns: dict[str, list[str]]) -> DataSource:
    return DataSource(
        name=name,
        attributes=tuple(column(name, col, vals) for col, vals in columns.items()),
    )


PERSON_NAME = SemanticLabel("Person", "name")
BIRTH_DATE = SemanticLabel("Person", "birthDate")
CITY_NAME = SemanticLabel("City", "name")
STATE_NAME = SemanticLabel("State", "name")
ORG_NAME = SemanticLabel("Organization", "name")


@pytest.fixture
def employees_source() -> DataSource:
    return make_source(
        "Employees",
        {
            "employer": ["CSIRO", "Data61", "NICTA"],
            "employee": ["Neil", "Mary", "Henry"],
            "DOB": ["05/21/1916", "12/07/1990", "03/15/2000"],
        },
    )


@pytest.fixture
def example_corpus(employees_source):
    """Three small personal/business sources with 12 attributes, one unknown."""
    personal = make_source(
        "personal-info",
        {
            "name": ["Neil", "Mary", "Henry"],
            "birthDate": ["21-05-1916", "07-12-1990", "15-03-2000"],
            "city": ["Waterloo", "Eveleigh", "Redfern"],
            "state": ["NSW", "NSW", "NSW"],
            "workplace": ["CSIRO", "CSIRO", "Data61"],
        },
    )
    business = make_source(
        "businessInfo",
        {
            "company": ["CSIRO", "Data61", "NICTA"],
            "ceo": ["Larry Marshall", "Adrian Turner", "Hugh Durrant"],
            "state": [
                "Australian Capital Territory",
                "New South Wales",
                "New South Wales",
            ],
            "founded": ["21-05-1916", "12-07-2016", "15-03-2002"],
        },
    )
    labels = {
        ("personal-info", "name"): PERSON_NAME,
        ("personal-info", "birthDate"): BIRTH_DATE,
        ("personal-info", "city"): CITY_NAME,
        ("personal-info", "state"): STATE_NAME,
        ("personal-info", "workplace"): ORG_NAME,
        ("Employees", "employer"): ORG_NAME,
        ("Employees", "employee"): PERSON_NAME,
        ("Employees", "DOB"): BIRTH_DATE,
        ("businessInfo", "company"): ORG_NAME,
        ("businessInfo", "ceo"): PERSON_NAME,
        ("businessInfo", "state"): STATE_NAME,
        ("businessInfo", "founded"): UNKNOWN,
    }
    return build_corpus([personal, business, employees_source], labels)
