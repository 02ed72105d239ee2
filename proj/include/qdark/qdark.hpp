#pragma once

#include "qdark/angular.hpp"
#include "qdark/errors.hpp"
#include "qdark/filter.hpp"
#include "qdark/fock.hpp"
#include "qdark/gds.hpp"
#include "qdark/io.hpp"
#include "qdark/model.hpp"
#include "qdark/ops.hpp"
#include "qdark/oracle.hpp"
