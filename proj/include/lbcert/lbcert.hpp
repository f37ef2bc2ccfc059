#pragma once

#include "lbcert/rational.hpp"
#include "lbcert/numth.hpp"
#include "lbcert/path.hpp"
#include "lbcert/tree.hpp"
#include "lbcert/certificate.hpp"
#include "lbcert/engine.hpp"
#include "lbcert/search.hpp"
