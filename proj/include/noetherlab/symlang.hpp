#pragma once

#include "noetherlab/symlang/differentiate.hpp"
#include "noetherlab/symlang/evaluate.hpp"
#include "noetherlab/symlang/expr.hpp"
#include "noetherlab/symlang/parser.hpp"
#include "noetherlab/symlang/simplify.hpp"
