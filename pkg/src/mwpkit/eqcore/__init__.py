from .tree import (
    EquationTree,
    EquationError,
    ParseError,
    EvalError,
    OPERATORS,
    op_node,
    slot_node,
    const_node,
    parse_infix,
    print_infix,
    to_polish,
    from_polish,
    evaluate,
    prototype_key,
)
from .corpus import (
    ProblemInstance,
    CorpusError,
    mask_numbers,
    problem_from_record,
    problem_to_record,
    load_problems,
    save_records,
)
