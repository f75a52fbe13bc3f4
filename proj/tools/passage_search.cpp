#include "commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("passage_search"));
    return retrieval::cli::run(argc, argv);
}
