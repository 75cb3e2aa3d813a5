from src.exact.instance import MilpInstance
from src.exact.knapsack import knapsack_01
from src.exact.search import ExactSolution, enumerate_exhaustive, solve_exact
from src.exact.timing import Timing, find_timing, list_schedule, schedule_makespan
from src.exact.verify import Violation, verify_schedule
