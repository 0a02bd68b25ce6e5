#pragma once

#include <jetc/error.hpp>
#include <jetc/expr.hpp>
#include <jetc/jet_space.hpp>
#include <jetc/trace.hpp>
#include <jetc/connection.hpp>
#include <jetc/phg.hpp>
#include <jetc/frobenius.hpp>
#include <jetc/problem_file.hpp>
